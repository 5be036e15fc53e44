"""Command-line front end: synth | train | encode | query | evaluate | ablate.

Exit codes are a stable contract: 0 success, 2 configuration error, 3 data
error, 4 numerical failure.  Every command is idempotent given identical
inputs and seeds (wall-clock fields in reports aside).  Set the THREADS
environment variable to bound internal BLAS parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, alm, dataio, evaluation, hashmodel, pipeline, retrieval
from .config import RunConfig, load_config
from .errors import (
    InvalidConfig,
    MalformedFile,
    NumericalError,
    SingularSystem,
    TagHashError,
)

_thread_limiter = None


def _apply_thread_limit():
    global _thread_limiter
    threads = os.environ.get("THREADS")
    if not threads:
        return
    import threadpoolctl

    _thread_limiter = threadpoolctl.threadpool_limits(limits=int(threads))


def _dataset_paths(cfg: RunConfig):
    out = Path(cfg.out)
    features = Path(cfg.features) if cfg.features else out / "features.dmat"
    tags = Path(cfg.tags) if cfg.tags else out / "tags.txt"
    labels = Path(cfg.labels) if cfg.labels else out / "labels.txt"
    return features, tags, labels


def _load_dataset(cfg: RunConfig, need_labels: bool = False) -> dataio.Dataset:
    """Load the configured dataset files, or synthesize when none exist."""
    features, tags, labels = _dataset_paths(cfg)
    if not features.exists() and not cfg.features:
        return dataio.generate_synthetic(cfg.synth_config())
    X = dataio.load_dense_matrix(features, format="binary")
    T = dataio.load_sparse_binary(tags)
    L = None
    if labels.exists():
        L = dataio.load_sparse_binary(labels)
    elif need_labels:
        raise MalformedFile(f"labels file {labels} not found")
    return dataio.Dataset(features=X, tags=T, labels=L)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    cfg = load_config(args.config, overrides={"seed": args.seed, "out": args.out})
    ds = dataio.generate_synthetic(cfg.synth_config())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_dense_matrix(out / "features.dmat", ds.features, format="binary")
    dataio.write_sparse_binary(out / "tags.txt", ds.tags)
    dataio.write_sparse_binary(out / "labels.txt", ds.labels)
    print(
        f"synth: wrote n={ds.n} d={ds.features.shape[0]} c={ds.tags.rows} "
        f"clusters={ds.labels.rows} to {out}"
    )
    return 0


def cmd_train(args) -> int:
    cfg = load_config(
        args.config,
        overrides={
            "seed": args.seed,
            "out": args.out,
            "variant": args.variant,
            "bits": args.bits,
        },
    )
    params = cfg.train_params()
    ds = _load_dataset(cfg)
    tags = ds.tags
    job = pipeline.run_training(
        ds.features,
        tags,
        params,
        cfg.graph_params(),
        cfg.seed,
        center=cfg.center,
        activation=cfg.activation,
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    hashmodel.save_model(out / "model.hmod", job.model)
    report = {
        "config": cfg.as_dict(),
        "variant": params.variant,
        "bits": params.r,
        "iterations": job.result.iters_used,
        "converged": job.result.converged,
        "objective_history": job.result.objective_history,
        "wall_time_sec": job.wall_time_sec,
        "retrieval_backend": retrieval.BACKEND,
    }
    with open(out / "train_report.json", "w") as f:
        json.dump(report, f, indent=2)
    print(
        f"train: variant={params.variant} r={params.r} "
        f"iters={job.result.iters_used} converged={job.result.converged} "
        f"({job.wall_time_sec:.2f}s) -> {out / 'model.hmod'}"
    )
    return 0


def cmd_encode(args) -> int:
    model = hashmodel.load_model(args.model)
    X = dataio.load_dense_matrix(args.features, format=args.format)
    codes = hashmodel.encode(model, X)
    hashmodel.save_codes(args.out, codes)
    print(f"encode: {codes.n} codes of {codes.r} bits -> {args.out}")
    return 0


def cmd_query(args) -> int:
    db = hashmodel.load_codes(args.db)
    if args.queries:
        queries = hashmodel.load_codes(args.queries)
    else:
        if not (args.features and args.model):
            raise InvalidConfig("query needs --queries, or --features with --model")
        model = hashmodel.load_model(args.model)
        queries = hashmodel.encode(
            model, dataio.load_dense_matrix(args.features, format=args.format)
        )
    index = retrieval.build_index(db)
    lines = []
    for qi in range(queries.n):
        ids, dists = retrieval.query(index, queries.words[qi], args.k)
        lines.append(f"# query {qi}")
        lines.extend(
            f"{rank}\t{int(i)}\t{int(d)}"
            for rank, (i, d) in enumerate(zip(ids, dists), start=1)
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    db = hashmodel.load_codes(args.db)
    queries = hashmodel.load_codes(args.queries)
    db_labels = dataio.load_sparse_binary(args.db_labels)
    query_labels = dataio.load_sparse_binary(args.query_labels)
    index = retrieval.build_index(db)
    judge = evaluation.RelevanceJudge(query_labels, db_labels)
    score = evaluation.mean_average_precision(index, queries, judge, k=args.k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curve = evaluation.pr_curve(index, queries, judge)
    evaluation.write_pr_csv(out / "pr.csv", curve)
    print(f"map\t{score:.10f}")
    return 0


def cmd_ablate(args) -> int:
    cfg = load_config(args.config, overrides={"seed": args.seed, "out": args.out})
    ds = _load_dataset(cfg, need_labels=True)
    if ds.labels is None:
        raise MalformedFile("ablation needs a labelled dataset")
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    bits = [int(b) for b in args.bits.split(",")] if args.bits else [cfg.bits]
    rows = evaluation.run_ablation_suite(
        ds,
        cfg.train_params(),
        variants,
        seeds,
        gp=cfg.graph_params(),
        train_n=cfg.train_n,
        query_n=cfg.query_n,
        bits=bits,
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_ablation_csv(out / "ablation.csv", rows)
    for row in rows:
        print(
            f"{row['variant']}\tr={row['r']}\tseed={row['seed']}\t"
            f"map={row['map']:.4f}"
        )
    print(f"ablate: {len(rows)} rows -> {out / 'ablation.csv'}")
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taghash",
        description="Learn and query compact binary codes for tagged image collections.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="config file or preset name")
        p.add_argument("--seed", type=int, default=None, help="global seed override")
        p.add_argument("--out", default=None, help="output directory override")

    p = sub.add_parser("synth", help="generate a synthetic tagged dataset")
    add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a hash model")
    add_common(p)
    p.add_argument("--variant", default=None, choices=alm.VARIANTS)
    p.add_argument("--bits", type=int, default=None, help="code length override")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="hash a feature matrix into packed codes")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--format", default="binary", choices=("binary", "csv"))
    p.add_argument("--out", required=True, help="output code file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("query", help="rank database codes for each query")
    p.add_argument("--db", required=True, help="database code file")
    p.add_argument("--queries", default=None, help="query code file")
    p.add_argument("--features", default=None, help="raw query features")
    p.add_argument("--model", default=None, help="model for raw features")
    p.add_argument("--format", default="binary", choices=("binary", "csv"))
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default=None, help="TSV output path (default stdout)")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="MAP and PR curve on shared labels")
    p.add_argument("--db", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--db-labels", required=True)
    p.add_argument("--query-labels", required=True)
    p.add_argument("--k", type=int, default=None, help="optional MAP cutoff")
    p.add_argument("--out", default=".", help="directory for pr.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="train and score ablation variants")
    add_common(p)
    p.add_argument(
        "--variants",
        default=",".join(alm.VARIANTS),
        help="comma-separated variant names",
    )
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--bits", default=None, help="comma-separated code lengths")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    _apply_thread_limit()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, SingularSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TagHashError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
