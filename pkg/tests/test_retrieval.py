import numpy as np
import pytest

from taghash import _hamming_np
from taghash import hashmodel as hm
from taghash import retrieval
from taghash.errors import EmptyIndex, LengthMismatch

try:
    from taghash import _hamming

    BACKENDS = [("compiled", _hamming), ("numpy", _hamming_np)]
except ImportError:  # pragma: no cover
    BACKENDS = [("numpy", _hamming_np)]


def random_codes(rng, r, n):
    signs = rng.choice([-1.0, 1.0], size=(r, n))
    return signs, hm.pack(signs)


@pytest.mark.parametrize("name,kernels", BACKENDS)
def test_kernels_match_dot_product_oracle(name, kernels):
    rng = np.random.default_rng(0)
    for r in (1, 17, 64, 65, 128):
        signs, pc = random_codes(rng, r, 50)
        dists = kernels.distances_many(pc.words, pc.words)
        oracle = (r - signs.T @ signs) / 2
        assert np.array_equal(dists, oracle.astype(np.int64)), (name, r)


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend unavailable")
    rng = np.random.default_rng(1)
    _, pc = random_codes(rng, 100, 200)
    a = BACKENDS[0][1].distances_many(pc.words, pc.words[:7])
    b = BACKENDS[1][1].distances_many(pc.words, pc.words[:7])
    assert np.array_equal(a, b)


def test_hamming_basics():
    signs = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]])
    pc = hm.pack(signs)
    assert retrieval.hamming(pc.words[0], pc.words[0], 3) == 0
    assert retrieval.hamming(pc.words[0], pc.words[1], 3) == 1
    with pytest.raises(LengthMismatch):
        retrieval.hamming(pc.words[0], np.zeros(2, dtype=np.uint64), 3)


def test_metric_axioms():
    rng = np.random.default_rng(2)
    r = 33
    _, pc = random_codes(rng, r, 30)
    for _ in range(300):
        i, j, k = rng.integers(30, size=3)
        a, b, c = pc.words[i], pc.words[j], pc.words[k]
        dab = retrieval.hamming(a, b, r)
        assert retrieval.hamming(a, a, r) == 0
        assert dab == retrieval.hamming(b, a, r)
        assert dab <= retrieval.hamming(a, c, r) + retrieval.hamming(c, b, r)


def test_build_index_validation():
    rng = np.random.default_rng(3)
    _, pc = random_codes(rng, 8, 5)
    idx = retrieval.build_index(pc)
    assert np.array_equal(idx.ids, np.arange(5))
    with pytest.raises(LengthMismatch):
        retrieval.build_index(pc, ids=np.arange(4))
    # duplicate ids are legal; ids are opaque
    retrieval.build_index(pc, ids=np.zeros(5, dtype=np.int64))


def test_empty_index():
    pc = hm.pack(np.ones((4, 0)))
    idx = retrieval.build_index(pc)
    assert idx.n == 0
    with pytest.raises(EmptyIndex):
        retrieval.query(idx, np.zeros(1, dtype=np.uint64), k=1)


def test_query_self_match_and_full_ranking():
    rng = np.random.default_rng(4)
    signs, pc = random_codes(rng, 16, 25)
    idx = retrieval.build_index(pc)
    ids, dists = retrieval.query(idx, pc.words[7], k=100)
    assert len(ids) == 25
    assert dists[0] == 0
    assert 7 in ids[dists == 0]
    assert sorted(ids.tolist()) == list(range(25))
    assert np.all(np.diff(dists) >= 0)


def brute_force_ranking(signs, q_sign):
    """Oracle: rank by descending +/-1 dot product, ties by position."""
    scores = signs.T @ q_sign
    return np.argsort(-scores, kind="stable")


def test_query_matches_brute_force_with_ties():
    rng = np.random.default_rng(5)
    signs, pc = random_codes(rng, 8, 60)  # short codes force many ties
    idx = retrieval.build_index(pc)
    for qi in range(10):
        ids, dists = retrieval.query(idx, pc.words[qi], k=60)
        oracle = brute_force_ranking(signs, signs[:, qi])
        assert np.array_equal(ids, oracle)


def test_all_distances_shape_and_agreement():
    rng = np.random.default_rng(6)
    signs, pc = random_codes(rng, 32, 40)
    _, qc = random_codes(rng, 32, 5)
    idx = retrieval.build_index(pc)
    D = retrieval.all_distances(idx, qc)
    assert D.shape == (5, 40)
    for qi in range(5):
        for di in range(40):
            assert D[qi, di] == retrieval.hamming(qc.words[qi], pc.words[di], 32)
