"""Augmented-Lagrangian discrete solver for tag-guided hash codes.

Minimizes, over sign matrices Z (r x n), transfer matrix P (c x r) and the
feature model:

    |Z - P^T Y|_{2,1}  -  alpha Tr(Z S Z^T)  -  beta Tr(Z K Z^T)
                       +  nu |phi(X) - Z|_F^2

where S is the anchor-graph affinity, K the hypergraph kernel, and the
l2,1 norm sums column (per-sample) Euclidean norms so noisy tag residuals
are suppressed.  Auxiliary variables A = Z - P^T Y and B = Z move the
discrete constraint out of the non-smooth term; the resulting augmented
Lagrangian (penalty mu, multipliers E_A, E_B) yields a closed-form update
cycle, ending in a single sign operation for Z.

Ablation variants (one per configuration flag):

    full         the complete objective
    no_direct    drop the tag-regression term and its A/P machinery
    no_indirect  drop the hypergraph term (beta = 0)
    no_tags      no_direct, with the hypergraph built on features alone
    no_denoise   tag regression with a plain Frobenius loss (closed-form P,
                 no shrinkage variable A)
    relaxed      continuous surrogate for the Z-step, mean-thresholded at
                 the end (the classic relax-and-round baseline)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anchorgraph import AnchorGraph, apply_affinity
from .errors import DimensionMismatch, InvalidConfig, NumericalError
from .hashmodel import FeatureModel, _solve_ridge, fit_feature_model
from .hypergraph import Hypergraph, apply_hyperkernel

VARIANTS = ("full", "no_direct", "no_indirect", "no_tags", "no_denoise", "relaxed")

# variants whose direct-transfer term is the l2,1 loss with shrinkage
_L21_VARIANTS = ("full", "no_indirect", "relaxed")


@dataclass
class TrainParams:
    """Optimizer weights and schedule; defaults are the tuned desk-scale set."""

    r: int = 32
    alpha: float = 0.01
    beta: float = 0.001
    nu: float = 0.001
    rho: float = 1.1
    mu0: float = 0.01
    mu_max: float = 1e6
    max_outer_iters: int = 50
    rel_tol: float = 1e-5
    ridge_eps: float = 1e-6
    seed: int = 0
    variant: str = "full"

    def validate(self):
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"unknown variant {self.variant!r}")
        if self.r < 1:
            raise InvalidConfig("code length r must be >= 1")
        if self.rho <= 1.0:
            raise InvalidConfig("rho must be > 1")
        if self.mu0 <= 0 or self.mu_max <= 0:
            raise InvalidConfig("mu0 and mu_max must be positive")
        if min(self.alpha, self.beta, self.nu) < 0:
            raise InvalidConfig("alpha, beta, nu must be non-negative")
        if self.max_outer_iters < 1:
            raise InvalidConfig("max_outer_iters must be >= 1")
        if self.rel_tol <= 0:
            raise InvalidConfig("rel_tol must be positive")
        if self.ridge_eps < 0:
            raise InvalidConfig("ridge_eps must be non-negative")

    def uses_tags_directly(self) -> bool:
        return self.variant in _L21_VARIANTS or self.variant == "no_denoise"

    def effective_beta(self) -> float:
        return 0.0 if self.variant == "no_indirect" else self.beta


@dataclass
class TrainResult:
    Z: np.ndarray  # r x n signs
    P: np.ndarray | None  # c x r transfer matrix (None without direct term)
    feature_model: FeatureModel
    objective_history: list[float] = field(default_factory=list)
    converged: bool = False
    iters_used: int = 0


def _pty(P: np.ndarray, Y) -> np.ndarray:
    """P^T Y as an r x n dense array; Y may be scipy-sparse or dense."""
    return (Y.T @ P).T


def prox_l21_columns(T: np.ndarray, lam: float) -> np.ndarray:
    """Column-wise shrinkage: the proximal operator of lam * sum_i |a_i|_2.

    Columns with norm strictly greater than lam shrink toward zero by lam;
    all others (boundary included) become zero columns.
    """
    if lam < 0:
        raise InvalidConfig("shrinkage threshold must be non-negative")
    norms = np.linalg.norm(T, axis=0)
    scale = np.zeros_like(norms)
    np.divide(norms - lam, norms, out=scale, where=norms > lam)
    return T * scale[None, :]


def update_A(Z, P, Y, E_A, mu):
    """Shrinkage step on the tag-regression residual T = Z - P^T Y + E_A/mu."""
    T = Z - _pty(P, Y) + E_A / mu
    return prox_l21_columns(T, 1.0 / mu)


def update_P(Z, A, E_A, Y, mu, ridge_eps):
    """Normal equations P = (Y Y^T + eps I)^{-1} Y (Z^T - A^T + E_A^T/mu)."""
    rhs = Z.T - A.T + E_A.T / mu  # n x r
    G = Y @ Y.T
    if hasattr(G, "toarray"):
        G = G.toarray()
    return _solve_ridge(np.asarray(G), Y @ rhs, ridge_eps)


def update_B(Z, E_B, mu, alpha, beta, G: AnchorGraph | None, Hg: Hypergraph | None):
    """Stationary point of the consensus subproblem: B = Z + E_B/mu
    + (alpha/mu) Z S + (beta/mu) Z K."""
    B = Z + E_B / mu
    if alpha:
        B += (alpha / mu) * apply_affinity(G, Z)
    if beta:
        B += (beta / mu) * apply_hyperkernel(Hg, Z)
    return B


def zstep_argument(A, P, Y, B, E_A, E_B, mu, alpha, beta, G, Hg, nu, phi, direct):
    """Linear coefficient matrix of the Z-subproblem.

    Over sign matrices the subproblem reduces to maximizing Tr(Z^T F); the
    optimizer is Z = sgn(F) entry-wise.
    """
    F = mu * B - E_B
    if direct:
        F += mu * A + mu * _pty(P, Y) - E_A
    if alpha:
        F += alpha * apply_affinity(G, B)
    if beta:
        F += beta * apply_hyperkernel(Hg, B)
    if nu:
        F += (2.0 * nu) * phi
    return F


def update_Z(A, P, Y, B, E_A, E_B, mu, alpha, beta, G, Hg, nu, phi, direct=True):
    """Single sign operation solving the discrete Z-subproblem; sgn(0) = -1."""
    F = zstep_argument(A, P, Y, B, E_A, E_B, mu, alpha, beta, G, Hg, nu, phi, direct)
    return np.where(F > 0, 1.0, -1.0)


def update_multipliers(Z, P, Y, A, B, E_A, E_B, mu, rho, mu_max, direct=True):
    """Multiplier ascent on both consensus constraints, then grow mu by rho."""
    if direct:
        E_A = E_A + mu * (Z - _pty(P, Y) - A)
    E_B = E_B + mu * (Z - B)
    return E_A, E_B, min(rho * mu, mu_max)


def objective_raw(Z, P, Y, G, Hg, phi, params: TrainParams) -> float:
    """Value of the overall objective at (Z, P, phi), disabled terms omitted."""
    val = 0.0
    if params.variant in _L21_VARIANTS:
        R = Z - _pty(P, Y)
        val += float(np.linalg.norm(R, axis=0).sum())
    elif params.variant == "no_denoise":
        R = Z - _pty(P, Y)
        val += float((R * R).sum())
    if params.alpha:
        val -= params.alpha * float(np.sum(apply_affinity(G, Z) * Z))
    beta = params.effective_beta()
    if beta:
        val -= beta * float(np.sum(apply_hyperkernel(Hg, Z) * Z))
    if params.nu:
        D = phi - Z
        val += params.nu * float((D * D).sum())
    return val


def augmented_objective(Z, P, Y, A, B, E_A, E_B, mu, phi, G, Hg, params) -> float:
    """Augmented Lagrangian value; used by the debug-mode monotonicity checks."""
    val = 0.0
    direct = params.uses_tags_directly()
    if direct:
        R = Z - _pty(P, Y)
        if params.variant in _L21_VARIANTS:
            val += float(np.linalg.norm(A, axis=0).sum())
            C = R - A + E_A / mu
            val += 0.5 * mu * float((C * C).sum())
        else:  # no_denoise: smooth penalty, no shrinkage variable
            val += 0.5 * mu * float((R * R).sum())
    CB = Z - B + E_B / mu
    val += 0.5 * mu * float((CB * CB).sum())
    if params.alpha:
        val -= params.alpha * float(np.sum(apply_affinity(G, B) * Z))
    beta = params.effective_beta()
    if beta:
        val -= beta * float(np.sum(apply_hyperkernel(Hg, B) * Z))
    if params.nu:
        D = phi - Z
        val += params.nu * float((D * D).sum())
    return val


def _mean_threshold_rows(Zc: np.ndarray) -> np.ndarray:
    """Binarize each bit-row at its mean; ties (including constant rows) to -1."""
    return np.where(Zc > Zc.mean(axis=1, keepdims=True), 1.0, -1.0)


def train(
    X: np.ndarray,
    Y,
    G: AnchorGraph | None,
    Hg: Hypergraph | None,
    params: TrainParams,
    feature_model_fitter=None,
    debug: bool = False,
) -> TrainResult:
    """Run the closed-form update cycle until the objective stalls.

    ``Y`` is the tag matrix as a scipy sparse (or dense) c x n array; it may
    be None for variants that never touch tags.  ``feature_model_fitter``
    maps (X, Z) to a FeatureModel; the default is the ridge least-squares
    refit.  With nu = 0 the feature model is fitted once post-hoc and the
    quantization term stays out of the cycle.
    """
    params.validate()
    if params.variant == "relaxed":
        return train_relaxed(X, Y, G, Hg, params, feature_model_fitter, debug)
    return _run_cycle(X, Y, G, Hg, params, feature_model_fitter, debug, relaxed=False)


def train_relaxed(
    X: np.ndarray,
    Y,
    G: AnchorGraph | None,
    Hg: Hypergraph | None,
    params: TrainParams,
    feature_model_fitter=None,
    debug: bool = False,
) -> TrainResult:
    """Relax-and-round baseline: continuous Z kept through the cycle, each
    bit-row mean-thresholded after convergence."""
    if params.variant != "relaxed":
        raise InvalidConfig("train_relaxed requires variant='relaxed'")
    params.validate()
    return _run_cycle(X, Y, G, Hg, params, feature_model_fitter, debug, relaxed=True)


def _run_cycle(X, Y, G, Hg, params, fitter, debug, relaxed):
    n = X.shape[1]
    r = params.r
    direct = params.uses_tags_directly()
    l21 = params.variant in _L21_VARIANTS
    alpha, beta, nu = params.alpha, params.effective_beta(), params.nu
    if direct and Y is None:
        raise InvalidConfig(f"variant {params.variant!r} requires a tag matrix")
    if alpha and G is None:
        raise InvalidConfig("alpha > 0 requires an anchor graph")
    if beta and Hg is None:
        raise InvalidConfig("beta > 0 requires a hypergraph")
    if G is not None and G.n != n:
        raise DimensionMismatch(f"anchor graph n = {G.n}, features n = {n}")
    if Hg is not None and Hg.n != n:
        raise DimensionMismatch(f"hypergraph n = {Hg.n}, features n = {n}")
    if fitter is None:
        def fitter(Xf, Zf):
            return fit_feature_model(Xf, Zf, ridge_eps=params.ridge_eps)

    rng = np.random.default_rng(params.seed)
    Z = rng.integers(0, 2, size=(r, n)).astype(np.float64) * 2.0 - 1.0
    B = Z.copy()
    A = np.zeros((r, n))
    E_A = np.zeros((r, n))
    E_B = np.zeros((r, n))
    c = Y.shape[0] if direct else 0
    P = np.zeros((c, r)) if direct else None
    mu = params.mu0

    fm = None
    phi = np.zeros((r, n))
    if nu > 0:
        fm = fitter(X, Z)
        phi = fm.outputs(X)

    history: list[float] = []
    prev = None
    converged = False
    check = _DebugChecker(params, X, Y, G, Hg) if debug else None
    for _ in range(params.max_outer_iters):
        if l21:
            A = update_A(Z, P, Y, E_A, mu)
            if check:
                check.step("A", Z, P, Y, A, B, E_A, E_B, mu, phi)
            P = update_P(Z, A, E_A, Y, mu, params.ridge_eps)
            if check:
                check.step("P", Z, P, Y, A, B, E_A, E_B, mu, phi)
        elif params.variant == "no_denoise":
            P = update_P(Z, A, E_A, Y, mu, params.ridge_eps)  # A, E_A stay 0
            if check:
                check.step("P", Z, P, Y, A, B, E_A, E_B, mu, phi)
        B = update_B(Z, E_B, mu, alpha, beta, G, Hg)
        if check:
            check.step("B", Z, P, Y, A, B, E_A, E_B, mu, phi)
        F = zstep_argument(
            A, P, Y, B, E_A, E_B, mu, alpha, beta, G, Hg, nu, phi, direct
        )
        if relaxed:
            Z = F / (2.0 * mu + 2.0 * nu)
        else:
            Z = np.where(F > 0, 1.0, -1.0)
            if check:
                check.step("Z", Z, P, Y, A, B, E_A, E_B, mu, phi)
        if nu > 0:
            fm = fitter(X, Z)
            phi = fm.outputs(X)
        # only the l2,1 path carries the A-constraint and its multiplier;
        # no_denoise keeps a plain penalty with E_A fixed at zero
        E_A, E_B, mu = update_multipliers(
            Z, P, Y, A, B, E_A, E_B, mu, params.rho, params.mu_max, direct=l21
        )
        if check:
            check.reset(Z, P, Y, A, B, E_A, E_B, mu, phi)

        obj = objective_raw(Z, P, Y, G, Hg, phi, params)
        if not np.isfinite(obj):
            raise NumericalError(f"objective became non-finite: {obj}")
        history.append(obj)
        if prev is not None and abs(obj - prev) < params.rel_tol * max(
            abs(prev), 1e-12
        ):
            converged = True
            break
        prev = obj

    if relaxed:
        Z = _mean_threshold_rows(Z)
    if fm is None or relaxed:
        fm = fitter(X, Z)
    return TrainResult(
        Z=Z,
        P=P,
        feature_model=fm,
        objective_history=history,
        converged=converged,
        iters_used=len(history),
    )


class _DebugChecker:
    """Asserts that every sub-update keeps the augmented objective from
    rising while mu and the multipliers are frozen."""

    def __init__(self, params, X, Y, G, Hg):
        self.params = params
        self.Y = Y
        self.G = G
        self.Hg = Hg
        self.last = None
        self.last_step = "init"

    def _value(self, Z, P, Y, A, B, E_A, E_B, mu, phi):
        return augmented_objective(
            Z, P, Y, A, B, E_A, E_B, mu, phi, self.G, self.Hg, self.params
        )

    def step(self, name, Z, P, Y, A, B, E_A, E_B, mu, phi):
        val = self._value(Z, P, Y, A, B, E_A, E_B, mu, phi)
        if self.last is not None:
            slack = 1e-9 * (1.0 + abs(self.last))
            assert val <= self.last + slack, (
                f"augmented objective rose {self.last} -> {val} "
                f"during update {name} (after {self.last_step})"
            )
        self.last = val
        self.last_step = name

    def reset(self, Z, P, Y, A, B, E_A, E_B, mu, phi):
        # multipliers/mu changed; restart the within-iteration chain
        self.last = self._value(Z, P, Y, A, B, E_A, E_B, mu, phi)
        self.last_step = "multipliers"
