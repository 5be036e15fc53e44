import numpy as np
import pytest

from taghash import evaluation as ev
from taghash import hashmodel as hm
from taghash import retrieval
from taghash.dataio import SparseBinaryMatrix


def ap_direct(rel):
    """Independent direct-definition AP: average the precision at each
    relevant rank over the total number of relevant items."""
    rel = list(rel)
    total = sum(rel)
    if total == 0:
        return 0.0
    hits = 0
    precisions = []
    for rank, flag in enumerate(rel, start=1):
        if flag:
            hits += 1
            precisions.append(hits / rank)
    return sum(precisions) / total


def test_ap_reference_case():
    assert ev.average_precision([1, 0, 1]) == pytest.approx(5.0 / 6.0, abs=1e-12)


def test_ap_perfect_and_degenerate():
    assert ev.average_precision([1, 1, 1, 1]) == 1.0
    assert ev.average_precision([0, 0, 0]) == 0.0


def test_ap_hand_cases_match_direct_definition():
    cases = [
        [1],
        [0, 1],
        [1, 0, 1],
        [0, 0, 1, 1],
        [1, 1, 0, 0, 1],
        [0, 1, 0, 1, 0, 1],
        [1, 0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 1],
        [1, 1, 1, 0, 1, 1],
        [0, 1, 1, 1, 0, 0, 0, 1],
    ]
    for case in cases:
        assert ev.average_precision(case) == pytest.approx(ap_direct(case), abs=1e-12)


def test_ap_random_lists_match_direct_definition():
    rng = np.random.default_rng(0)
    for _ in range(200):
        rel = (rng.random(int(rng.integers(1, 40))) < 0.3).astype(int)
        assert ev.average_precision(rel) == pytest.approx(ap_direct(rel), abs=1e-12)


def test_ap_insensitive_below_last_relevant():
    assert ev.average_precision([1, 0, 1, 0, 0]) == ev.average_precision([1, 0, 1])


def test_ap_promoting_a_relevant_item_never_hurts():
    rng = np.random.default_rng(1)
    for _ in range(100):
        rel = (rng.random(12) < 0.4).astype(int)
        positions = np.flatnonzero(rel)
        if positions.size == 0 or positions[0] == 0:
            continue
        p = positions[rng.integers(positions.size)]
        moved = rel.copy()
        moved[p - 1], moved[p] = moved[p], moved[p - 1]
        assert ev.average_precision(moved) >= ev.average_precision(rel) - 1e-12


def test_ap_cutoff():
    # @2 on [1,0,1]: one hit in top-2, denominator min(R=2, k=2)
    assert ev.average_precision([1, 0, 1], k=2) == pytest.approx(0.5)


def one_hot_labels(assign, k):
    return SparseBinaryMatrix(
        k, len(assign), [np.array([a], dtype=np.int64) for a in assign]
    )


def test_judge_relevance_shared_label():
    db = one_hot_labels([0, 1, 0, 2], 3)
    q = one_hot_labels([0, 2], 3)
    judge = ev.RelevanceJudge(q, db)
    assert np.array_equal(judge.relevance(0), [True, False, True, False])
    assert np.array_equal(judge.relevance(1), [False, False, False, True])


def _index_for(signs):
    return retrieval.build_index(hm.pack(signs))


def test_map_single_query_reduces_to_ap():
    rng = np.random.default_rng(2)
    db_signs = rng.choice([-1.0, 1.0], size=(8, 10))
    q_signs = db_signs[:, [3]]
    db_labels = one_hot_labels([0, 1, 1, 0, 1, 0, 1, 1, 0, 1], 2)
    q_labels = one_hot_labels([0], 2)
    judge = ev.RelevanceJudge(q_labels, db_labels)
    index = _index_for(db_signs)
    qc = hm.pack(q_signs)
    got = ev.mean_average_precision(index, qc, judge)
    dists = retrieval.all_distances(index, qc)[0]
    order = np.argsort(dists, kind="stable")
    rel = judge.relevance(0)[order]
    assert got == pytest.approx(ev.average_precision(rel))


def test_map_identical_codes_equals_positional_ranking():
    # all codes equal: the ranking degenerates to database order, so MAP is
    # computable directly from the label layout
    signs = np.ones((6, 12))
    assign = [0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2]
    db_labels = one_hot_labels(assign, 3)
    q_labels = one_hot_labels([0, 1, 2], 3)
    judge = ev.RelevanceJudge(q_labels, db_labels)
    index = _index_for(signs)
    qc = hm.pack(np.ones((6, 3)))
    got = ev.mean_average_precision(index, qc, judge)
    want = np.mean(
        [ap_direct([1 if assign[i] == q else 0 for i in range(12)]) for q in range(3)]
    )
    assert got == pytest.approx(want, abs=1e-12)


def test_pr_curve_perfect_ranking():
    db_signs = np.hstack([np.ones((8, 4)), -np.ones((8, 4))])
    # queries identical to the first group
    q_signs = db_signs[:, [0]]
    db_labels = one_hot_labels([0, 0, 0, 0, 1, 1, 1, 1], 2)
    q_labels = one_hot_labels([0], 2)
    judge = ev.RelevanceJudge(q_labels, db_labels)
    curve = ev.pr_curve(_index_for(db_signs), hm.pack(q_signs), judge)
    assert curve.recall.shape == (101,)
    assert np.allclose(curve.precision, 1.0)


def test_pr_curve_monotone_envelope():
    rng = np.random.default_rng(4)
    rel = (rng.random(30) < 0.4).astype(bool)
    interp = ev.interpolate_precision(rel)
    # envelope definition: precision at recall t is the max raw precision at
    # any recall >= t
    pos = np.flatnonzero(rel) + 1.0
    cum = np.arange(1, pos.size + 1)
    raw_recall, raw_prec = cum / cum[-1], cum / pos
    for t, p in zip(ev.RECALL_GRID, interp):
        want = raw_prec[raw_recall >= t - 1e-12].max()
        assert p == pytest.approx(want, abs=1e-12)
    assert interp[0] >= interp[-1]
    assert np.all(np.diff(interp) <= 1e-12)


def test_pr_curve_excludes_degenerate_queries():
    signs = np.ones((4, 6))
    db_labels = one_hot_labels([0, 0, 0, 1, 1, 1], 3)
    q_labels = one_hot_labels([0, 2], 3)  # label 2 never occurs in the db
    judge = ev.RelevanceJudge(q_labels, db_labels)
    curve = ev.pr_curve(_index_for(signs), hm.pack(np.ones((4, 2))), judge)
    only_first = ev.pr_curve(
        _index_for(signs), hm.pack(np.ones((4, 1))),
        ev.RelevanceJudge(one_hot_labels([0], 3), db_labels),
    )
    assert np.allclose(curve.precision, only_first.precision)


def test_map_random_codes_near_class_prior():
    rng = np.random.default_rng(5)
    n, q, k = 2000, 50, 8
    db_labels = one_hot_labels(np.arange(n) % k, k)
    q_labels = one_hot_labels(np.arange(q) % k, k)
    db_signs = rng.choice([-1.0, 1.0], size=(32, n))
    q_signs = rng.choice([-1.0, 1.0], size=(32, q))
    judge = ev.RelevanceJudge(q_labels, db_labels)
    score = ev.mean_average_precision(_index_for(db_signs), hm.pack(q_signs), judge)
    assert abs(score - 1.0 / k) < 0.02
