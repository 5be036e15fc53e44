"""End-to-end training wiring shared by the CLI and the ablation harness.

All randomness flows from one global seed, expanded into fixed per-stage
sub-seeds so stages can be re-run independently and whole pipelines are
reproducible byte for byte.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from . import alm, hashmodel
from .anchorgraph import AnchorGraph, build_anchor_graph
from .dataio import SparseBinaryMatrix
from .errors import InvalidConfig
from .hypergraph import Hypergraph, build_hypergraph
from .kmeans import DEFAULT_MAX_ITERS, DEFAULT_TOL

_STAGES = {"dataset": 0, "split": 1, "anchors": 2, "concepts": 3, "init-z": 4}


def stage_seed(global_seed: int, stage: str) -> int:
    """Deterministic per-stage sub-seed derived from the global seed."""
    seq = np.random.SeedSequence([int(global_seed), _STAGES[stage]])
    return int(seq.generate_state(1)[0])


@dataclass
class GraphParams:
    """Sizes and kernel knobs of the two graph structures."""

    m: int = 100
    s: int = 5
    a: int = 500
    anchor_sigma_sq: float | None = None
    hyper_sigma_sq: float | None = None
    tag_scale: float = 1.0
    kmeans_max_iters: int = DEFAULT_MAX_ITERS
    kmeans_tol: float = DEFAULT_TOL


def build_graphs(
    X: np.ndarray,
    tags: SparseBinaryMatrix | None,
    gp: GraphParams,
    params: alm.TrainParams,
    global_seed: int,
) -> tuple[AnchorGraph | None, Hypergraph | None]:
    """Build only the graphs the chosen variant actually consumes.

    The tag-free ablation builds its hypergraph on the features alone; all
    other variants stack tags under the features.
    """
    G = None
    if params.alpha > 0:
        G = build_anchor_graph(
            X,
            m=gp.m,
            s=gp.s,
            seed=stage_seed(global_seed, "anchors"),
            sigma_sq=gp.anchor_sigma_sq,
            kmeans_max_iters=gp.kmeans_max_iters,
            kmeans_tol=gp.kmeans_tol,
        )
    Hg = None
    if params.effective_beta() > 0:
        hyper_tags = None if params.variant == "no_tags" else tags
        Hg = build_hypergraph(
            X,
            hyper_tags,
            a=gp.a,
            seed=stage_seed(global_seed, "concepts"),
            sigma_sq=gp.hyper_sigma_sq,
            tag_scale=gp.tag_scale,
            kmeans_max_iters=gp.kmeans_max_iters,
            kmeans_tol=gp.kmeans_tol,
        )
    return G, Hg


@dataclass
class TrainJob:
    result: alm.TrainResult
    model: hashmodel.HashModel
    graph: AnchorGraph | None
    hypergraph: Hypergraph | None
    wall_time_sec: float


def run_training(
    X: np.ndarray,
    tags: SparseBinaryMatrix | None,
    params: alm.TrainParams,
    gp: GraphParams,
    global_seed: int,
    center: bool = True,
    activation: str = "identity",
) -> TrainJob:
    """Graphs, optimizer cycle and final hash model for one training set.

    Deliberately accepts only features and tags: evaluation labels have no
    path into training.
    """
    t0 = time.perf_counter()
    G, Hg = build_graphs(X, tags, gp, params, global_seed)
    Y = None
    if params.uses_tags_directly():
        if tags is None:
            raise InvalidConfig(
                f"variant {params.variant!r} requires a tag matrix"
            )
        Y = tags.to_csc()

    run_params = dataclasses.replace(
        params, seed=stage_seed(global_seed, "init-z")
    )

    def fitter(Xf, Zf):
        return hashmodel.fit_feature_model(
            Xf, Zf, ridge_eps=params.ridge_eps, center=center, activation=activation
        )

    result = alm.train(X, Y, G, Hg, run_params, feature_model_fitter=fitter)
    model = hashmodel.HashModel(
        feature_model=result.feature_model,
        r=params.r,
        meta={
            "variant": params.variant,
            "m": gp.m,
            "s": gp.s,
            "a": gp.a,
            "seed": int(global_seed),
            "iters": result.iters_used,
            "converged": result.converged,
        },
    )
    return TrainJob(
        result=result,
        model=model,
        graph=G,
        hypergraph=Hg,
        wall_time_sec=time.perf_counter() - t0,
    )
