"""Flat ``key = value`` run configuration with preset includes.

The format is deliberately diff-friendly: one assignment per line, ``#``
comments, and ``include <preset-or-path>`` lines that splice in another
file (later assignments override earlier ones).  Presets shipped with the
package (``mirflickr``, ``nuswide``, ``synth-small``) resolve by name.
Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .alm import TrainParams
from .dataio import SynthConfig
from .errors import InvalidConfig
from .pipeline import GraphParams


@dataclass
class RunConfig:
    # synthetic dataset
    n: int = 1000
    d: int = 16
    c: int = 16
    n_clusters: int = 4
    tag_noise_rate: float = 0.1
    cluster_spread: float = 1.0
    # optimizer
    alpha: float = 0.01
    beta: float = 0.001
    nu: float = 0.001
    rho: float = 1.1
    mu0: float = 0.01
    mu_max: float = 1e6
    bits: int = 32
    max_outer_iters: int = 50
    rel_tol: float = 1e-5
    ridge_eps: float = 1e-6
    variant: str = "full"
    # graphs
    m: int = 100
    s: int = 5
    a: int = 500
    anchor_sigma_sq: float | None = None
    hyper_sigma_sq: float | None = None
    tag_scale: float = 1.0
    kmeans_max_iters: int = 100
    kmeans_tol: float = 1e-6
    # splits
    train_n: int = 500
    query_n: int = 100
    # paths
    features: str = ""
    tags: str = ""
    labels: str = ""
    out: str = "."
    # misc
    seed: int = 0
    center: bool = True
    activation: str = "identity"

    def train_params(self) -> TrainParams:
        p = TrainParams(
            r=self.bits,
            alpha=self.alpha,
            beta=self.beta,
            nu=self.nu,
            rho=self.rho,
            mu0=self.mu0,
            mu_max=self.mu_max,
            max_outer_iters=self.max_outer_iters,
            rel_tol=self.rel_tol,
            ridge_eps=self.ridge_eps,
            seed=self.seed,
            variant=self.variant,
        )
        p.validate()
        return p

    def graph_params(self) -> GraphParams:
        return GraphParams(
            m=self.m,
            s=self.s,
            a=self.a,
            anchor_sigma_sq=self.anchor_sigma_sq,
            hyper_sigma_sq=self.hyper_sigma_sq,
            tag_scale=self.tag_scale,
            kmeans_max_iters=self.kmeans_max_iters,
            kmeans_tol=self.kmeans_tol,
        )

    def synth_config(self) -> SynthConfig:
        from .pipeline import stage_seed

        cfg = SynthConfig(
            n=self.n,
            d=self.d,
            n_clusters=self.n_clusters,
            c=self.c,
            tag_noise_rate=self.tag_noise_rate,
            cluster_spread=self.cluster_spread,
            seed=stage_seed(self.seed, "dataset"),
        )
        cfg.validate()
        return cfg

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_OPTIONAL_FLOATS = ("anchor_sigma_sq", "hyper_sigma_sq")


def _parse_value(key: str, raw: str):
    f = _FIELDS[key]
    raw = raw.strip()
    if key in _OPTIONAL_FLOATS:
        if raw.lower() in ("none", ""):
            return None
        return float(raw)
    if f.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise InvalidConfig(f"{key}: expected integer, got {raw!r}") from None
    if f.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise InvalidConfig(f"{key}: expected number, got {raw!r}") from None
    if f.type in ("bool", bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidConfig(f"{key}: expected boolean, got {raw!r}")
    return raw


def preset_path(name: str) -> Path:
    base = resources.files("taghash").joinpath("presets")
    p = base.joinpath(f"{name}.cfg")
    if not p.is_file():
        available = sorted(q.name[:-4] for q in base.iterdir() if q.name.endswith(".cfg"))
        raise InvalidConfig(f"unknown preset {name!r}; available: {available}")
    return Path(str(p))


def _read_assignments(path: Path, seen: set, out: dict) -> None:
    if path in seen:
        raise InvalidConfig(f"circular include of {path}")
    seen.add(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include"):
            target = line[len("include"):].strip()
            if not target:
                raise InvalidConfig(f"{path}:{lineno}: empty include")
            candidate = (path.parent / target).resolve()
            if candidate.is_file():
                _read_assignments(candidate, seen, out)
            else:
                _read_assignments(preset_path(target), seen, out)
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, raw)


def load_config(path_or_preset: str, overrides: dict | None = None) -> RunConfig:
    """Parse a config file (or bare preset name) into a validated RunConfig."""
    values: dict = {}
    p = Path(path_or_preset)
    if p.is_file():
        _read_assignments(p.resolve(), set(), values)
    else:
        _read_assignments(preset_path(path_or_preset), set(), values)
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in _FIELDS:
                raise InvalidConfig(f"unknown override {key!r}")
            values[key] = val
    cfg = RunConfig(**values)
    cfg.train_params()  # validates optimizer fields
    if cfg.s < 1 or cfg.m < 1 or cfg.a < 1:
        raise InvalidConfig("m, s and a must be positive")
    return cfg
