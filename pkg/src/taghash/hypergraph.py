"""Image-concept hypergraph over stacked feature+tag vectors.

Images are vertices; concepts detected by k-means on the stacked matrix
[X; Y] are hyperedges.  The incidence H holds Gaussian similarities between
every image and every concept, all hyperedge weights are 1, and the
normalized kernel

    K = D_v^{-1/2} H D_w D_e^{-1} H^T D_v^{-1/2}

is applied implicitly (M -> M K via staged products) so the n x n kernel is
never formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import SparseBinaryMatrix
from .errors import DimensionMismatch, InvalidConfig
from .kmeans import DEFAULT_MAX_ITERS, DEFAULT_TOL, kmeans, squared_distances

# exp underflows to exactly 0 near -745; clip to keep incidences positive
_MIN_EXPONENT = -700.0


@dataclass
class Hypergraph:
    a: int
    H: np.ndarray  # n x a incidence, entries in (0, 1]
    d_v: np.ndarray  # n, vertex degrees
    d_e: np.ndarray  # a, hyperedge degrees
    d_w: np.ndarray  # a, hyperedge weights (all ones)
    concepts: np.ndarray  # (d [+ c]) x a
    sigma_sq: float

    @property
    def n(self) -> int:
        return self.H.shape[0]


def build_hypergraph(
    X: np.ndarray,
    Y: SparseBinaryMatrix | None,
    a: int,
    seed: int = 0,
    sigma_sq: float | None = None,
    tag_scale: float = 1.0,
    kmeans_max_iters: int = DEFAULT_MAX_ITERS,
    kmeans_tol: float = DEFAULT_TOL,
) -> Hypergraph:
    """Detect ``a`` concepts on [X; Y] and build the incidence structure.

    With ``Y=None`` (the tag-free ablation) concepts are detected on X
    alone.  The bandwidth sigma^2 defaults to the mean squared distance
    from samples to their assigned concept; ``sigma_sq`` overrides it.
    ``tag_scale`` multiplies the tag rows before stacking (1.0 stacks the
    binary tags against the real features unchanged).
    """
    n = X.shape[1]
    if a < 1 or a > n:
        raise InvalidConfig(f"a = {a} concepts with n = {n} samples")
    if Y is None:
        stacked = np.asarray(X, dtype=np.float64)
    else:
        if Y.cols != n:
            raise DimensionMismatch(
                f"tags have {Y.cols} columns, features have {n}"
            )
        stacked = np.vstack([X, tag_scale * Y.to_dense()])
    stacked = np.asfortranarray(stacked)

    cent = kmeans(
        stacked, a, max_iters=kmeans_max_iters, tol=kmeans_tol, seed=seed
    )
    d2 = squared_distances(stacked, cent.centers)  # n x a
    if sigma_sq is None:
        sigma_sq = cent.inertia / n
    if sigma_sq <= 0.0:
        sigma_sq = 1.0
    sigma_sq = float(sigma_sq)

    expo = -d2 / (2.0 * sigma_sq)
    H = np.exp(np.maximum(expo, _MIN_EXPONENT))

    d_w = np.ones(a)
    d_e = H.sum(axis=0)
    d_v = H @ d_w  # = row sums while all weights are 1
    assert np.allclose(d_v, H.sum(axis=1), rtol=0, atol=1e-9)
    if np.any(d_e <= 0.0) or np.any(d_v <= 0.0):
        raise InvalidConfig("hypergraph has a zero-degree vertex or edge")
    return Hypergraph(
        a=a,
        H=H,
        d_v=d_v,
        d_e=d_e,
        d_w=d_w,
        concepts=cent.centers,
        sigma_sq=sigma_sq,
    )


def apply_hyperkernel(Hg: Hypergraph, M: np.ndarray) -> np.ndarray:
    """M D_v^{-1/2} H D_w D_e^{-1} H^T D_v^{-1/2} via staged products."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] != Hg.n:
        raise DimensionMismatch(
            f"operand has shape {M.shape}, hypergraph has n = {Hg.n}"
        )
    dv_isqrt = 1.0 / np.sqrt(Hg.d_v)
    T = (M * dv_isqrt[None, :]) @ Hg.H  # r x a
    T *= (Hg.d_w / Hg.d_e)[None, :]
    out = T @ Hg.H.T  # r x n
    out *= dv_isqrt[None, :]
    return out
