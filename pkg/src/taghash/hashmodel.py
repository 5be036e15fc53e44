"""Out-of-sample linear hash function and bit-level code packing.

The hash function is h(x) = sgn(W^T (x - center)) with W from
ridge-regularized least squares against the learned sign matrix; sgn(0)
maps to -1.  Sign matrices pack into little-endian 64-bit words, bit 1
meaning code value +1, with zeroed padding bits so whole-word popcounts
are valid.

File formats
------------
codes  magic ``HCOD1\\0``, u64-LE n, u64-LE r, then n * ceil(r/64)
       little-endian u64 words, one code's words consecutive.
model  magic ``HMOD1\\0``, u64-LE d, u64-LE r, activation byte
       (0 identity, 1 tanh), center-present byte, then f64-LE arrays:
       center (d, if present) followed by W (d x r, column-major).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidSign, MalformedFile, SingularSystem

CODES_MAGIC = b"HCOD1\x00"
MODEL_MAGIC = b"HMOD1\x00"

_ACTIVATIONS = ("identity", "tanh")


@dataclass
class FeatureModel:
    """Linear feature model x -> W^T (x - center), optionally tanh-squashed.

    The activation affects only the continuous outputs fed back into the
    quantization term during joint training; sgn(tanh(t)) = sgn(t), so hash
    encodings are activation-independent.
    """

    W: np.ndarray  # d x r
    activation: str = "identity"
    center: np.ndarray | None = None

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise MalformedFile(f"unknown activation {self.activation!r}")

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def r(self) -> int:
        return self.W.shape[1]

    def project(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != self.d:
            raise DimensionMismatch(
                f"features have {X.shape[0]} rows, model expects {self.d}"
            )
        if self.center is not None:
            X = X - self.center[:, None]
        return self.W.T @ X  # r x q

    def outputs(self, X: np.ndarray) -> np.ndarray:
        P = self.project(X)
        return np.tanh(P) if self.activation == "tanh" else P

    def sign_codes(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.project(X) > 0, 1.0, -1.0)


@dataclass
class HashModel:
    feature_model: FeatureModel
    r: int
    meta: dict = field(default_factory=dict)


@dataclass
class PackedCodes:
    r: int
    words: np.ndarray  # n x ceil(r/64), uint64, canonical zero padding

    @property
    def n(self) -> int:
        return self.words.shape[0]


def words_per_code(r: int) -> int:
    return (r + 63) // 64


def _solve_ridge(G: np.ndarray, B: np.ndarray, ridge_eps: float) -> np.ndarray:
    if ridge_eps > 0:
        G = G + ridge_eps * np.eye(G.shape[0])
    try:
        return np.linalg.solve(G, B)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None


def fit_linear_hash(
    X: np.ndarray,
    Z: np.ndarray,
    ridge_eps: float = 1e-6,
    center: bool = True,
    activation: str = "identity",
) -> FeatureModel:
    """W = (X X^T + eps I)^{-1} X Z^T on (optionally mean-centered) features.

    Centering is subtracted again at encode time; it is on by default
    because sgn of uncentered projections collapses on off-center data.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if X.shape[1] != Z.shape[1]:
        raise DimensionMismatch(
            f"features n = {X.shape[1]} but codes n = {Z.shape[1]}"
        )
    mean = X.mean(axis=1) if center else None
    Xc = X - mean[:, None] if center else X
    W = _solve_ridge(Xc @ Xc.T, Xc @ Z.T, ridge_eps)
    return FeatureModel(W=W, activation=activation, center=mean)


def fit_feature_model(
    X: np.ndarray,
    Z: np.ndarray,
    ridge_eps: float = 1e-6,
    center: bool = True,
    activation: str = "identity",
) -> FeatureModel:
    """Least-squares refit of the continuous feature model against codes.

    Same computation as :func:`fit_linear_hash`; kept separate because it
    runs once per optimizer iteration in joint mode versus once post-hoc in
    the pure linear-hash mode.
    """
    return fit_linear_hash(X, Z, ridge_eps, center, activation)


# ---------------------------------------------------------------------------
# bit packing


def pack(signs: np.ndarray) -> PackedCodes:
    """Pack an r x n sign matrix into n codes of ceil(r/64) uint64 words."""
    signs = np.asarray(signs)
    if signs.ndim != 2:
        raise InvalidSign("sign matrix must be 2-dimensional")
    if not np.all(np.abs(signs) == 1):
        raise InvalidSign("sign matrix entries must be -1 or +1")
    r, n = signs.shape
    w = words_per_code(r)
    bits = (signs > 0).T.astype(np.uint8)  # n x r
    packed = np.packbits(bits, axis=1, bitorder="little")  # n x ceil(r/8)
    padded = np.zeros((n, w * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    words = padded.view("<u8").astype(np.uint64)
    return PackedCodes(r=r, words=np.ascontiguousarray(words))


def unpack(codes: PackedCodes) -> np.ndarray:
    """Inverse of :func:`pack`: r x n float64 matrix of +/-1."""
    raw = np.ascontiguousarray(codes.words).astype("<u8").view(np.uint8)
    raw = raw.reshape(codes.n, 8 * words_per_code(codes.r))
    bits = np.unpackbits(raw, axis=1, bitorder="little")[:, : codes.r]
    return (2.0 * bits - 1.0).T


def encode(model: HashModel, X_new: np.ndarray) -> PackedCodes:
    """Hash a d x q feature matrix into packed codes."""
    return pack(model.feature_model.sign_codes(X_new))


# ---------------------------------------------------------------------------
# file I/O


def save_codes(path, codes: PackedCodes) -> None:
    with open(path, "wb") as f:
        f.write(CODES_MAGIC)
        f.write(np.asarray([codes.n, codes.r], dtype="<u8").tobytes())
        f.write(codes.words.astype("<u8").tobytes(order="C"))


def load_codes(path) -> PackedCodes:
    with open(path, "rb") as f:
        raw = f.read()
    header = len(CODES_MAGIC) + 16
    if len(raw) < header or raw[: len(CODES_MAGIC)] != CODES_MAGIC:
        raise MalformedFile(f"{path}: not a code file")
    n, r = (int(v) for v in np.frombuffer(raw, "<u8", count=2, offset=len(CODES_MAGIC)))
    w = words_per_code(r)
    if len(raw) != header + n * w * 8:
        raise MalformedFile(f"{path}: truncated code file")
    words = (
        np.frombuffer(raw, "<u8", offset=header)
        .reshape(n, w)
        .astype(np.uint64)
    )
    if r % 64 and n:
        mask = np.uint64((1 << (r % 64)) - 1)
        if np.any(words[:, -1] & ~mask):
            raise MalformedFile(f"{path}: nonzero padding bits")
    return PackedCodes(r=r, words=np.ascontiguousarray(words))


def save_model(path, model: HashModel) -> None:
    fm = model.feature_model
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(np.asarray([fm.d, fm.r], dtype="<u8").tobytes())
        f.write(bytes([_ACTIVATIONS.index(fm.activation)]))
        f.write(bytes([0 if fm.center is None else 1]))
        if fm.center is not None:
            f.write(fm.center.astype("<f8").tobytes())
        f.write(np.asfortranarray(fm.W).astype("<f8").tobytes(order="F"))


def load_model(path) -> HashModel:
    with open(path, "rb") as f:
        raw = f.read()
    header = len(MODEL_MAGIC) + 16 + 2
    if len(raw) < header or raw[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise MalformedFile(f"{path}: not a model file")
    d, r = (int(v) for v in np.frombuffer(raw, "<u8", count=2, offset=len(MODEL_MAGIC)))
    act_byte = raw[len(MODEL_MAGIC) + 16]
    has_center = raw[len(MODEL_MAGIC) + 17]
    if act_byte >= len(_ACTIVATIONS) or has_center > 1:
        raise MalformedFile(f"{path}: bad activation or center flag")
    expected = header + (d if has_center else 0) * 8 + d * r * 8
    if len(raw) != expected:
        raise MalformedFile(
            f"{path}: expected {expected} bytes for d={d}, r={r}, got {len(raw)}"
        )
    offset = header
    center = None
    if has_center:
        center = np.frombuffer(raw, "<f8", count=d, offset=offset).copy()
        offset += d * 8
    W = (
        np.frombuffer(raw, "<f8", count=d * r, offset=offset)
        .reshape((d, r), order="F")
        .copy()
    )
    fm = FeatureModel(W=W, activation=_ACTIVATIONS[act_byte], center=center)
    return HashModel(feature_model=fm, r=r)
