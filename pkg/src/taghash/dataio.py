"""Dataset ingestion, synthetic generation and train/retrieval/query splits.

Matrix conventions
------------------
Dense matrices are float64 numpy arrays in column-major (Fortran) order so
that one sample occupies one contiguous column: features are d x n, codes
r x n.  Tag and label matrices are binary and stored sparse, one sorted
index list per column.

File formats
------------
dense binary  magic ``DMAT1\\0``, u64-LE rows, u64-LE cols, then
              rows*cols f64-LE values in column-major order.
dense CSV     comma-separated, one matrix row per line, no header.
sparse text   first line ``rows cols``, then one ``row_index col_index``
              pair per line, 0-based, whitespace-separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import InvalidConfig, InvalidSplit, MalformedFile

DENSE_MAGIC = b"DMAT1\x00"


def check_dense(X: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a dense matrix: 2-d, float64, all entries finite."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise MalformedFile(f"{name} must be 2-dimensional, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise MalformedFile(f"{name} contains non-finite entries")
    return X


class SparseBinaryMatrix:
    """Binary matrix stored as one sorted, duplicate-free index list per column.

    Used for the tag matrix (c x n, entry 1 iff image i carries tag j) and
    for evaluation labels.
    """

    def __init__(self, rows: int, cols: int, col_indices: list[np.ndarray]):
        if len(col_indices) != cols:
            raise MalformedFile(
                f"expected {cols} columns of indices, got {len(col_indices)}"
            )
        self.rows = int(rows)
        self.cols = int(cols)
        self.col_indices = []
        for j, idx in enumerate(col_indices):
            idx = np.unique(np.asarray(idx, dtype=np.int64))
            if idx.size and (idx[0] < 0 or idx[-1] >= rows):
                raise MalformedFile(
                    f"column {j} has index outside [0, {rows}) range"
                )
            self.col_indices.append(idx)

    @classmethod
    def from_pairs(cls, rows, cols, row_idx, col_idx) -> "SparseBinaryMatrix":
        row_idx = np.asarray(row_idx, dtype=np.int64)
        col_idx = np.asarray(col_idx, dtype=np.int64)
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= cols):
            raise MalformedFile("column index outside declared range")
        per_col = [row_idx[col_idx == j] for j in range(cols)]
        return cls(rows, cols, per_col)

    @classmethod
    def from_dense(cls, D: np.ndarray) -> "SparseBinaryMatrix":
        D = np.asarray(D)
        rows, cols = D.shape
        return cls(rows, cols, [np.flatnonzero(D[:, j]) for j in range(cols)])

    @property
    def nnz(self) -> int:
        return sum(idx.size for idx in self.col_indices)

    def to_dense(self) -> np.ndarray:
        D = np.zeros((self.rows, self.cols), order="F")
        for j, idx in enumerate(self.col_indices):
            D[idx, j] = 1.0
        return D

    def to_csc(self) -> sparse.csc_array:
        indptr = np.zeros(self.cols + 1, dtype=np.int64)
        for j, idx in enumerate(self.col_indices):
            indptr[j + 1] = indptr[j] + idx.size
        indices = (
            np.concatenate(self.col_indices)
            if self.cols
            else np.empty(0, dtype=np.int64)
        )
        data = np.ones(indices.size)
        return sparse.csc_array(
            (data, indices, indptr), shape=(self.rows, self.cols)
        )

    def subset_cols(self, cols: np.ndarray) -> "SparseBinaryMatrix":
        cols = np.asarray(cols, dtype=np.int64)
        return SparseBinaryMatrix(
            self.rows, cols.size, [self.col_indices[j] for j in cols]
        )

    def equals(self, other: "SparseBinaryMatrix") -> bool:
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and all(
                np.array_equal(a, b)
                for a, b in zip(self.col_indices, other.col_indices)
            )
        )


@dataclass
class Dataset:
    """Features plus tags, with optional evaluation-only labels.

    Labels never enter training code paths; the trainer API accepts only
    features and tags.
    """

    features: np.ndarray
    tags: SparseBinaryMatrix
    labels: SparseBinaryMatrix | None = None

    def __post_init__(self):
        n = self.features.shape[1]
        if self.tags.cols != n:
            raise MalformedFile(
                f"tags have {self.tags.cols} columns, features have {n}"
            )
        if self.labels is not None and self.labels.cols != n:
            raise MalformedFile(
                f"labels have {self.labels.cols} columns, features have {n}"
            )

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            features=np.asfortranarray(self.features[:, idx]),
            tags=self.tags.subset_cols(idx),
            labels=None if self.labels is None else self.labels.subset_cols(idx),
        )


@dataclass
class SynthConfig:
    """Parameters of the planted-cluster synthetic tagged dataset."""

    n: int
    d: int
    n_clusters: int
    c: int
    tag_noise_rate: float
    cluster_spread: float
    seed: int

    def validate(self):
        if self.n < 1 or self.d < 1 or self.c < 1:
            raise InvalidConfig("n, d and c must be positive")
        if not 0.0 <= self.tag_noise_rate <= 1.0:
            raise InvalidConfig(
                f"tag_noise_rate must lie in [0, 1], got {self.tag_noise_rate}"
            )
        if self.n_clusters < 1 or self.n_clusters > self.n:
            raise InvalidConfig("need 1 <= n_clusters <= n")
        if self.n_clusters > self.c:
            raise InvalidConfig("need n_clusters <= c (each cluster owns tags)")
        if self.cluster_spread < 0:
            raise InvalidConfig("cluster_spread must be non-negative")


# ---------------------------------------------------------------------------
# dense matrix I/O


def load_dense_matrix(path, format: str = "binary") -> np.ndarray:
    """Load a dense matrix from ``binary`` (DMAT1) or ``csv`` format."""
    if format == "binary":
        return _load_dense_binary(path)
    if format == "csv":
        return _load_dense_csv(path)
    raise InvalidConfig(f"unknown dense format {format!r}")


def write_dense_matrix(path, X: np.ndarray, format: str = "binary") -> None:
    X = check_dense(X)
    if format == "binary":
        rows, cols = X.shape
        with open(path, "wb") as f:
            f.write(DENSE_MAGIC)
            f.write(np.asarray([rows, cols], dtype="<u8").tobytes())
            f.write(np.asfortranarray(X).astype("<f8").tobytes(order="F"))
    elif format == "csv":
        # 17 significant digits round-trips float64 exactly
        np.savetxt(path, X, delimiter=",", fmt="%.17g")
    else:
        raise InvalidConfig(f"unknown dense format {format!r}")


def _load_dense_binary(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    header = len(DENSE_MAGIC) + 16
    if len(raw) < header:
        raise MalformedFile(f"{path}: truncated dense binary file")
    if raw[: len(DENSE_MAGIC)] != DENSE_MAGIC:
        raise MalformedFile(f"{path}: bad magic bytes")
    rows, cols = np.frombuffer(raw, dtype="<u8", count=2, offset=len(DENSE_MAGIC))
    rows, cols = int(rows), int(cols)
    expected = header + rows * cols * 8
    if len(raw) != expected:
        raise MalformedFile(
            f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=header)
    X = values.reshape((rows, cols), order="F")
    return check_dense(np.asfortranarray(X), name=str(path))


def _load_dense_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise MalformedFile(
                    f"{path}:{lineno}: expected {width} fields, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise MalformedFile(f"{path}: empty CSV matrix")
    return check_dense(np.asfortranarray(np.array(rows)), name=str(path))


# ---------------------------------------------------------------------------
# sparse binary I/O


def load_sparse_binary(path) -> SparseBinaryMatrix:
    """Load a binary matrix in triplet text format (sorted, deduplicated)."""
    with open(path, "r") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        raise MalformedFile(f"{path}: empty sparse matrix file")
    head = lines[0].split()
    if len(head) != 2:
        raise MalformedFile(f"{path}: header must be 'rows cols'")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise MalformedFile(f"{path}: non-integer header") from None
    if rows < 0 or cols < 0:
        raise MalformedFile(f"{path}: negative dimensions")
    ri, ci = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise MalformedFile(f"{path}:{lineno}: expected 'row col' pair")
        try:
            r, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedFile(f"{path}:{lineno}: non-integer index") from None
        if not (0 <= r < rows) or not (0 <= c < cols):
            raise MalformedFile(
                f"{path}:{lineno}: index ({r}, {c}) outside {rows}x{cols}"
            )
        ri.append(r)
        ci.append(c)
    return SparseBinaryMatrix.from_pairs(rows, cols, ri, ci)


def write_sparse_binary(path, M: SparseBinaryMatrix) -> None:
    with open(path, "w") as f:
        f.write(f"{M.rows} {M.cols}\n")
        for j, idx in enumerate(M.col_indices):
            for r in idx:
                f.write(f"{r} {j}\n")


# ---------------------------------------------------------------------------
# synthetic data


def cluster_tag_ownership(c: int, n_clusters: int) -> list[np.ndarray]:
    """Tags owned by each cluster: tag t belongs to cluster t mod n_clusters.

    Every cluster owns ceil(c / n_clusters) or floor(c / n_clusters) tags
    (exactly c / n_clusters when the counts divide, as in the shipped
    presets), and never zero since n_clusters <= c.
    """
    tags = np.arange(c)
    return [tags[tags % n_clusters == j] for j in range(n_clusters)]


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Seeded planted-cluster dataset: Gaussian clusters with cluster-owned tags.

    Construction (a pure function of ``cfg``):

    * cluster centers: d x n_clusters standard normal draws scaled by 4;
    * image i belongs to cluster i mod n_clusters (balanced);
    * features: center of the image's cluster plus isotropic Gaussian noise
      with standard deviation ``cluster_spread``;
    * true tags: the tag subset owned by the image's cluster;
    * observed tags: each (tag, image) slot is independently replaced, with
      probability ``tag_noise_rate``, by a fair coin flip (at rate 1.0 the
      observed tags carry no cluster information; at rate 0.0 they are
      exact);
    * labels: one-hot cluster membership, n_clusters x n (evaluation only).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    k, n, d, c = cfg.n_clusters, cfg.n, cfg.d, cfg.c

    centers = 4.0 * rng.standard_normal((d, k))
    assign = np.arange(n) % k
    noise = rng.standard_normal((d, n))
    X = np.asfortranarray(centers[:, assign] + cfg.cluster_spread * noise)

    ownership = cluster_tag_ownership(c, k)
    true_tags = np.zeros((c, n), dtype=bool)
    for j in range(k):
        cols = np.flatnonzero(assign == j)
        true_tags[np.ix_(ownership[j], cols)] = True

    randomize = rng.random((c, n)) < cfg.tag_noise_rate
    coins = rng.integers(0, 2, size=(c, n)).astype(bool)
    observed = np.where(randomize, coins, true_tags)

    tags = SparseBinaryMatrix.from_dense(observed)
    labels = SparseBinaryMatrix(
        k, n, [np.array([a], dtype=np.int64) for a in assign]
    )
    return Dataset(features=X, tags=tags, labels=labels)


def split_dataset(
    ds: Dataset, train_n: int, query_n: int, seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Split into (train, retrieval, query) sets.

    Queries are held out; the retrieval set is everything else; training
    samples are drawn from the retrieval set (training is a subset of the
    retrieval set).  Index sets are sorted and deterministic under ``seed``.
    """
    n = ds.n
    if train_n < 1 or query_n < 1:
        raise InvalidSplit("train_n and query_n must be positive")
    if train_n + query_n > n:
        raise InvalidSplit(
            f"train_n + query_n = {train_n + query_n} exceeds n = {n}"
        )
    if query_n >= n:
        raise InvalidSplit("query set would leave an empty retrieval set")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    query_idx = np.sort(perm[:query_n])
    retrieval_idx = np.sort(perm[query_n:])
    train_idx = np.sort(rng.choice(retrieval_idx, size=train_n, replace=False))
    return ds.subset(train_idx), ds.subset(retrieval_idx), ds.subset(query_idx)
