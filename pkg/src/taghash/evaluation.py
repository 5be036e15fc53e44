"""MAP and precision-recall evaluation against shared-label ground truth,
plus the ablation comparison harness.

Two items are relevant to each other iff their label sets intersect.  MAP
is computed over the full ranking by default (an optional @k cutoff is
available); queries with no relevant database item contribute AP = 0 and
are counted in the result.  Precision-recall curves are interpolated onto
101 standard recall points {0.00, 0.01, ..., 1.00} with the usual monotone
envelope, then averaged over queries.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from . import alm, hashmodel, pipeline, retrieval
from .dataio import Dataset, SparseBinaryMatrix, split_dataset
from .errors import InvalidConfig

logger = logging.getLogger(__name__)

RECALL_GRID = np.linspace(0.0, 1.0, 101)


@dataclass
class RelevanceJudge:
    """Shared-label relevance between query and database items."""

    query_labels: SparseBinaryMatrix  # L x q
    db_labels: SparseBinaryMatrix  # L x n

    def __post_init__(self):
        if self.query_labels.rows != self.db_labels.rows:
            raise InvalidConfig(
                "query and database labels use different vocabularies"
            )
        self._db_csr = self.db_labels.to_csc().T.tocsr()  # n x L

    def relevance(self, qi: int) -> np.ndarray:
        """Boolean (n,) mask: database items sharing >= 1 label with query qi."""
        y = np.zeros(self.query_labels.rows)
        y[self.query_labels.col_indices[qi]] = 1.0
        return (self._db_csr @ y) > 0


@dataclass
class PrCurve:
    recall: np.ndarray  # 101 standard recall levels
    precision: np.ndarray

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


def average_precision(ranked_relevance, k: int | None = None) -> float:
    """AP of one ranked relevance list; 0.0 when nothing relevant is ranked.

    Full-ranking AP by default: (1/R) * sum over relevant positions p of
    (relevant-up-to-p / p).  With a cutoff the list is truncated to its
    first k entries and the denominator becomes min(R, k).
    """
    rel = np.asarray(ranked_relevance, dtype=bool)
    total = int(rel.sum())
    if total == 0:
        return 0.0
    if k is not None:
        rel = rel[:k]
        denom = min(total, k)
    else:
        denom = total
    pos = np.flatnonzero(rel) + 1  # 1-based ranks of relevant items
    if pos.size == 0:
        return 0.0
    cum = np.arange(1, pos.size + 1)
    return float((cum / pos).sum() / denom)


def _ranked_relevance(index, query_codes, judge):
    """Yield per-query relevance lists in ranked order (positional ties)."""
    dists = retrieval.all_distances(index, query_codes)
    for qi in range(query_codes.n):
        order = np.argsort(dists[qi], kind="stable")
        yield judge.relevance(qi)[order]


def mean_average_precision(
    index: retrieval.HammingIndex,
    query_codes: hashmodel.PackedCodes,
    judge: RelevanceJudge,
    k: int | None = None,
) -> float:
    """Mean AP over all queries; degenerate queries count as 0 and are logged."""
    aps = []
    degenerate = 0
    for rel in _ranked_relevance(index, query_codes, judge):
        if not rel.any():
            degenerate += 1
        aps.append(average_precision(rel, k=k))
    if degenerate:
        logger.warning(
            "%d of %d queries have no relevant database item (AP = 0)",
            degenerate,
            len(aps),
        )
    return float(np.mean(aps)) if aps else 0.0


def interpolate_precision(rel: np.ndarray, grid: np.ndarray = RECALL_GRID):
    """Monotone-envelope precision of one relevance list at fixed recall levels.

    Interpolated precision at recall t is the maximum raw precision over
    all positions whose recall is >= t.
    """
    rel = np.asarray(rel, dtype=bool)
    total = int(rel.sum())
    if total == 0:
        raise InvalidConfig("cannot interpolate a query with no relevant items")
    pos = np.flatnonzero(rel) + 1.0
    cum = np.arange(1, total + 1)
    raw_recall = cum / total
    raw_prec = cum / pos
    # best precision achievable at recall >= each relevant point
    envelope = np.maximum.accumulate(raw_prec[::-1])[::-1]
    # first relevant point with recall >= t; recall 1.0 is always reached
    idx = np.searchsorted(raw_recall, grid, side="left")
    idx = np.minimum(idx, total - 1)
    return envelope[idx]


def pr_curve(
    index: retrieval.HammingIndex,
    query_codes: hashmodel.PackedCodes,
    judge: RelevanceJudge,
) -> PrCurve:
    """Average interpolated precision over queries at 101 recall levels.

    Queries with no relevant database item are excluded (and logged).
    """
    curves = []
    skipped = 0
    for rel in _ranked_relevance(index, query_codes, judge):
        if rel.any():
            curves.append(interpolate_precision(rel))
        else:
            skipped += 1
    if skipped:
        logger.warning("%d all-irrelevant queries excluded from PR curve", skipped)
    if not curves:
        raise InvalidConfig("no query has a relevant database item")
    return PrCurve(
        recall=RECALL_GRID.copy(), precision=np.mean(curves, axis=0)
    )


def write_pr_csv(path, curve: PrCurve) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["recall", "precision"])
        for rec, prec in curve.points():
            writer.writerow([f"{rec:.2f}", f"{prec:.10f}"])


# ---------------------------------------------------------------------------
# ablation harness


def evaluate_split(
    retrieval_ds: Dataset,
    query_ds: Dataset,
    model: hashmodel.HashModel,
    k: int | None = None,
) -> float:
    """Encode both sides with one model and score MAP on shared labels."""
    db_codes = hashmodel.encode(model, retrieval_ds.features)
    q_codes = hashmodel.encode(model, query_ds.features)
    index = retrieval.build_index(db_codes)
    judge = RelevanceJudge(query_ds.labels, retrieval_ds.labels)
    return mean_average_precision(index, q_codes, judge, k=k)


def run_ablation_suite(
    dataset: Dataset,
    base_params: alm.TrainParams,
    variants,
    seeds,
    gp: pipeline.GraphParams | None = None,
    train_n: int | None = None,
    query_n: int = 200,
    bits=None,
) -> list[dict]:
    """Train every (variant, code length, seed) and score MAP.

    All variants at one seed share the same split; graphs are rebuilt per
    variant because the tag-free ablation uses a different hypergraph.
    Returns one row per combination: variant, r, seed, map, iters,
    converged.
    """
    if dataset.labels is None:
        raise InvalidConfig("ablation needs a labelled dataset")
    for v in variants:
        if v not in alm.VARIANTS:
            raise InvalidConfig(f"unknown variant {v!r}")
    gp = gp or pipeline.GraphParams()
    bits = list(bits) if bits is not None else [base_params.r]
    if train_n is None:
        train_n = max(1, (dataset.n - query_n) // 2)

    rows = []
    for seed in seeds:
        split_s = pipeline.stage_seed(seed, "split")
        train_ds, retr_ds, query_ds = split_dataset(
            dataset, train_n=train_n, query_n=query_n, seed=split_s
        )
        for r in bits:
            for variant in variants:
                params = dataclasses.replace(
                    base_params, r=r, variant=variant, seed=seed
                )
                job = pipeline.run_training(
                    train_ds.features, train_ds.tags, params, gp, seed
                )
                score = evaluate_split(retr_ds, query_ds, job.model)
                rows.append(
                    {
                        "variant": variant,
                        "r": r,
                        "seed": int(seed),
                        "map": score,
                        "iters": job.result.iters_used,
                        "converged": job.result.converged,
                    }
                )
    return rows


def write_ablation_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "r", "seed", "map", "iters", "converged"])
        for row in rows:
            writer.writerow(
                [
                    row["variant"],
                    row["r"],
                    row["seed"],
                    f"{row['map']:.10f}",
                    row["iters"],
                    row["converged"],
                ]
            )
