from itertools import combinations

import numpy as np
import pytest

from taghash.errors import InvalidK
from taghash.kmeans import kmeans, squared_distances


def test_k_equals_n_recovers_points():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 6))
    res = kmeans(X, k=6, seed=1)
    assert res.inertia == pytest.approx(0.0, abs=1e-12)
    # centers are the points, up to permutation
    got = sorted(map(tuple, res.centers.T))
    want = sorted(map(tuple, X.T))
    assert np.allclose(got, want)


def _best_two_partition(X):
    """Exhaustive minimum SSE over all 2-partitions of the columns of X."""
    n = X.shape[1]
    best = np.inf
    best_centers = None
    for size in range(1, n):
        for left in combinations(range(n), size):
            right = tuple(i for i in range(n) if i not in left)
            c1 = X[:, left].mean(axis=1)
            c2 = X[:, right].mean(axis=1)
            sse = ((X[:, left] - c1[:, None]) ** 2).sum() + (
                (X[:, right] - c2[:, None]) ** 2
            ).sum()
            if sse < best:
                best = sse
                best_centers = {tuple(c1), tuple(c2)}
    return best, best_centers


def test_two_cluster_oracle():
    X = np.array([[0.0, 0.0, 10.0, 10.0], [0.0, 1.0, 0.0, 1.0]])
    best_sse, best_centers = _best_two_partition(X)
    assert best_sse == pytest.approx(1.0)
    assert best_centers == {(0.0, 0.5), (10.0, 0.5)}
    res = kmeans(X, k=2, seed=0)
    assert res.inertia == pytest.approx(best_sse, abs=1e-12)
    assert sorted(map(tuple, res.centers.T)) == sorted(best_centers)


def test_invalid_k():
    X = np.zeros((2, 4))
    with pytest.raises(InvalidK):
        kmeans(X, k=0, seed=0)
    with pytest.raises(InvalidK):
        kmeans(np.random.default_rng(0).standard_normal((2, 4)), k=5, seed=0)


def test_deterministic_under_seed():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((4, 50))
    a = kmeans(X, k=7, seed=42)
    b = kmeans(X, k=7, seed=42)
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.inertia == b.inertia


def test_result_consistency_invariants():
    rng = np.random.default_rng(4)
    for trial in range(5):
        X = rng.standard_normal((3, 60))
        k = int(rng.integers(2, 12))
        res = kmeans(X, k=k, seed=trial)
        # every cluster non-empty
        assert np.array_equal(np.unique(res.assignments), np.arange(k))
        # centers are the means of their assigned points
        for j in range(k):
            mean = X[:, res.assignments == j].mean(axis=1)
            assert np.allclose(res.centers[:, j], mean, atol=1e-9)
        # inertia matches its definition
        d2 = squared_distances(X, res.centers)
        sse = d2[np.arange(60), res.assignments].sum()
        assert res.inertia == pytest.approx(sse, rel=1e-6)


def test_handles_duplicate_points():
    # more clusters than distinct values along one axis
    X = np.repeat(np.array([[0.0, 1.0, 2.0, 3.0]]), 2, axis=0)
    X = np.tile(X, (1, 5))  # 20 points, 4 distinct
    res = kmeans(X, k=4, seed=0)
    assert res.inertia == pytest.approx(0.0, abs=1e-12)
    assert np.array_equal(np.unique(res.assignments), np.arange(4))
