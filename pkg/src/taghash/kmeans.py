"""Seeded k-means with k-means++ initialization and empty-cluster repair.

Shared by anchor selection (anchor graph) and concept detection
(hypergraph).  Points are columns: the input is dims x n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidK

DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-6


@dataclass
class Centroids:
    centers: np.ndarray  # dims x k
    assignments: np.ndarray  # n, values in [0, k)
    inertia: float

    @property
    def k(self) -> int:
        return self.centers.shape[1]

    @property
    def dims(self) -> int:
        return self.centers.shape[0]


def squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, points x centers (n x k)."""
    x2 = np.einsum("ij,ij->j", X, X)
    c2 = np.einsum("ij,ij->j", C, C)
    d2 = x2[:, None] - 2.0 * (X.T @ C) + c2[None, :]
    return np.maximum(d2, 0.0, out=d2)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[1]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[:, chosen[-1]][:, None]) ** 2).sum(axis=0)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with chosen centers; take the
            # lowest unchosen index for determinism
            taken = np.zeros(n, dtype=bool)
            taken[chosen] = True
            idx = int(np.flatnonzero(~taken)[0])
        chosen.append(idx)
        nd = ((X - X[:, idx][:, None]) ** 2).sum(axis=0)
        np.minimum(d2, nd, out=d2)
    return np.asfortranarray(X[:, chosen])


def _repair_empty(X, centers, assign, d2):
    """Move each empty cluster's center onto the point farthest from its own
    assigned center, then reassign.  Keeps k fixed, as the graph builders
    require exactly k centers."""
    k = centers.shape[1]
    n = X.shape[1]
    used = np.zeros(n, dtype=bool)
    for _ in range(k):
        counts = np.bincount(assign, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return centers, assign, d2
        point_err = d2[np.arange(n), assign].copy()
        point_err[used] = -1.0
        for j in empty:
            far = int(np.argmax(point_err))
            if point_err[far] < 0:
                raise InvalidK("k exceeds the number of distinct points")
            centers[:, j] = X[:, far]
            used[far] = True
            point_err[far] = -1.0
        d2 = squared_distances(X, centers)
        assign = np.argmin(d2, axis=1)
    raise InvalidK("k exceeds the number of distinct points")


def kmeans(
    points: np.ndarray,
    k: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> Centroids:
    """Lloyd iterations from k-means++ seeding, deterministic under seed.

    Stops when the relative inertia improvement falls below ``tol`` or after
    ``max_iters`` iterations.  The returned centers are exactly the means of
    their assigned points and no cluster is empty.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[1]
    if k < 1 or k > n:
        raise InvalidK(f"k = {k} with n = {n} points")
    if max_iters < 1:
        raise InvalidK(f"max_iters must be >= 1, got {max_iters}")

    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)

    prev_inertia = np.inf
    assign = None
    for _ in range(max_iters):
        d2 = squared_distances(X, centers)
        assign = np.argmin(d2, axis=1)  # ties go to the lower index
        centers, assign, d2 = _repair_empty(X, centers, assign, d2)
        inertia = float(d2[np.arange(n), assign].sum())
        # Lloyd monotonicity: each assignment+update round cannot increase
        # the within-cluster sum of squares
        assert inertia <= prev_inertia + 1e-9 * (1.0 + abs(prev_inertia))

        sums = np.zeros((X.shape[0], k))
        np.add.at(sums.T, assign, X.T)
        counts = np.bincount(assign, minlength=k).astype(np.float64)
        centers = np.asfortranarray(sums / counts[None, :])

        improvement = prev_inertia - inertia
        if improvement < tol * max(inertia, np.finfo(np.float64).tiny):
            break
        prev_inertia = inertia

    d2 = squared_distances(X, centers)
    inertia = float(d2[np.arange(n), assign].sum())
    return Centroids(centers=centers, assignments=assign, inertia=inertia)
