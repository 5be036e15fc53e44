"""Anchor-graph approximation of the visual affinity matrix.

The n x n affinity matrix is approximated through m anchor points as
S = V Lambda^{-1} V^T, where V holds truncated Gaussian similarities from
each sample to its s nearest anchors and Lambda = diag(V^T 1).  The graph
Laplacian I_n - S is never materialized; consumers apply the affinity
operator M -> M V Lambda^{-1} V^T through two sparse products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DegenerateAnchor, DimensionMismatch, InvalidConfig
from .kmeans import DEFAULT_MAX_ITERS, DEFAULT_TOL, kmeans, squared_distances

DEFAULT_S = 5


@dataclass
class AnchorGraph:
    m: int
    s: int
    V: sparse.csr_array  # n x m, rows sum to 1, <= s nonzeros per row
    lam: np.ndarray  # m, diag(V^T 1), all positive
    anchors: np.ndarray  # d x m
    bandwidth: float  # Gaussian kernel sigma^2

    @property
    def n(self) -> int:
        return self.V.shape[0]


def build_anchor_graph(
    X: np.ndarray,
    m: int,
    s: int = DEFAULT_S,
    seed: int = 0,
    sigma_sq: float | None = None,
    kmeans_max_iters: int = DEFAULT_MAX_ITERS,
    kmeans_tol: float = DEFAULT_TOL,
) -> AnchorGraph:
    """Anchors from k-means, then row-normalized truncated similarities.

    Each sample gets Gaussian weights exp(-dist^2 / (2 sigma^2)) to its s
    nearest anchors (ties broken toward the lower anchor index), normalized
    to sum 1.  The default bandwidth sigma^2 is the mean squared distance
    from the samples to their s-th nearest anchor, so the kernel is
    scale-free; ``sigma_sq`` overrides it.
    """
    n = X.shape[1]
    s = min(s, m)
    if s < 1:
        raise InvalidConfig(f"s must be >= 1, got {s}")
    if m > n:
        raise InvalidConfig(f"m = {m} anchors exceed n = {n} samples")

    cent = kmeans(X, m, max_iters=kmeans_max_iters, tol=kmeans_tol, seed=seed)
    anchors = cent.centers
    d2 = squared_distances(X, anchors)  # n x m
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :s]
    near_d2 = np.take_along_axis(d2, nearest, axis=1)

    if sigma_sq is None:
        sigma_sq = float(near_d2[:, -1].mean())
    if sigma_sq <= 0.0:
        sigma_sq = 1.0  # all truncated distances are zero; weights become 1
    sigma_sq = float(sigma_sq)

    weights = np.exp(-near_d2 / (2.0 * sigma_sq))
    row_sums = weights.sum(axis=1)
    dead = row_sums <= 0.0
    if np.any(dead):
        # total underflow: keep at least the nearest anchor
        weights[dead] = 0.0
        weights[dead, 0] = 1.0
        row_sums[dead] = 1.0
    weights /= row_sums[:, None]

    indptr = np.arange(0, s * n + 1, s, dtype=np.int64)
    V = sparse.csr_array(
        (weights.ravel(), nearest.ravel(), indptr), shape=(n, m)
    )
    V.eliminate_zeros()
    lam = np.asarray(V.sum(axis=0)).ravel()
    if np.any(lam <= 0.0):
        raise DegenerateAnchor(
            f"{int((lam <= 0).sum())} anchors attracted zero similarity mass"
        )
    return AnchorGraph(
        m=m, s=s, V=V, lam=lam, anchors=anchors, bandwidth=sigma_sq
    )


def apply_affinity(G: AnchorGraph, M: np.ndarray) -> np.ndarray:
    """M V Lambda^{-1} V^T as two sparse products, never forming n x n."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] != G.n:
        raise DimensionMismatch(
            f"operand has shape {M.shape}, graph has n = {G.n}"
        )
    T = G.V.T @ M.T  # m x r
    T /= G.lam[:, None]
    return (G.V @ T).T
