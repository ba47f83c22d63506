"""Command-line entry point.

Every subcommand is a thin wrapper over the library with the same seeds,
so CLI results match direct calls exactly.  Exit codes: 0 success, 2
invalid configuration or schema, 3 numerical failure.  Errors print one
machine-parseable JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import aggregate, metrics, pmle, reduction, simulate
from .dataio import (
    SchemaError,
    load_data,
    load_labels,
    load_model,
    save_data,
    save_model,
)
from .experiment import ExperimentConfig, run_experiment, write_report
from .mixture import LabeledSample
from .pmle import PmleConfig
from .reduction import GmrConfig

SHARD_MANIFEST = "manifest.json"
LOCALS_MANIFEST = "locals.json"


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="root random seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: THREADS environment variable, else 1)",
    )


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("THREADS", "1")))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shardmix",
        description="split-and-conquer Gaussian mixture learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="generate a random mixture with a target overlap")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-omega", type=float, required=True)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("gen-data", help="sample observations from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--no-labels", action="store_true", help="omit the label column")
    _add_common(p)

    p = sub.add_parser("split", help="shard a data file")
    p.add_argument("--data", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    _add_common(p)

    p = sub.add_parser("fit", help="global penalized MLE")
    _add_fit_options(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("fit-local", help="penalized MLE per shard")
    _add_fit_options(p)
    p.add_argument("--shards-dir", required=True)
    p.add_argument("--out-dir", required=True)
    _add_common(p)

    p = sub.add_parser("aggregate", help="combine local estimates")
    p.add_argument("--method", choices=("gmr", "median", "klavg", "pool"), required=True)
    p.add_argument("--locals-dir", required=True)
    p.add_argument("--k", type=int, default=None, help="target order (default: local order)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--per-machine-n", type=int, default=1000)
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("eval", help="score estimates or clusterings")
    p.add_argument("--metric", choices=("w1", "mcr", "ari"), required=True)
    p.add_argument("--model", help="estimated model JSON (w1, mcr)")
    p.add_argument("--truth", help="reference model JSON (w1, mcr)")
    p.add_argument("--data", help="labeled data CSV (mcr)")
    p.add_argument("--labels-a", help="first label file (ari)")
    p.add_argument("--labels-b", help="second label file (ari)")
    _add_common(p)

    p = sub.add_parser("experiment", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config output path")
    _add_common(p)

    return parser


def _add_fit_options(p: argparse.ArgumentParser):
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a-n", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--init-model", default=None, help="model JSON to start EM from")


def _fit_config(args) -> PmleConfig:
    init = load_model(args.init_model) if args.init_model else None
    return PmleConfig(
        K=args.k,
        a_n=args.a_n,
        tol=args.tol,
        max_iter=args.max_iter,
        init=init,
        n_starts=args.starts,
    )


def _cmd_gen_model(args) -> int:
    spec = simulate.OverlapSpec(
        d=args.d, K=args.k, max_omega=args.max_omega,
        mc_samples=args.mc_samples, seed=args.seed,
    )
    save_model(args.out, simulate.generate(spec))
    return 0


def _cmd_gen_data(args) -> int:
    model = load_model(args.model)
    sample = model.sample(args.n, args.seed)
    if args.no_labels or args.format == "bin":
        sample = LabeledSample(points=sample.points)
    save_data(args.out, sample, fmt=args.format)
    return 0


def _cmd_split(args) -> int:
    sample = load_data(args.data)
    sharded = aggregate.split(sample.points, args.m, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    files = []
    for idx, shard in enumerate(sharded.shards):
        name = f"shard_{idx:03d}.csv"
        save_data(os.path.join(args.out_dir, name), LabeledSample(points=shard))
        files.append(name)
    manifest = {
        "format": "shards-v1",
        "m": sharded.m,
        "files": files,
        "sizes": [int(s) for s in sharded.sizes],
    }
    with open(os.path.join(args.out_dir, SHARD_MANIFEST), "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    return 0


def _cmd_fit(args) -> int:
    sample = load_data(args.data)
    result = pmle.fit(sample.points, _fit_config(args), args.seed)
    save_model(args.out, result.estimate)
    return 0


def _load_shards(shards_dir: str) -> aggregate.ShardedDataset:
    path = os.path.join(shards_dir, SHARD_MANIFEST)
    with open(path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    if not isinstance(manifest, dict) or manifest.get("format") != "shards-v1":
        raise SchemaError(f"{path} is not a shards-v1 manifest")
    shards = [
        load_data(os.path.join(shards_dir, name)).points for name in manifest["files"]
    ]
    return aggregate.ShardedDataset(shards=tuple(shards))


def _cmd_fit_local(args) -> int:
    sharded = _load_shards(args.shards_dir)
    local = aggregate.fit_locals(sharded, _fit_config(args), args.seed, threads=_threads(args))
    os.makedirs(args.out_dir, exist_ok=True)
    files = []
    for idx, estimate in enumerate(local.estimates):
        name = f"local_{idx:03d}.json"
        save_model(os.path.join(args.out_dir, name), estimate)
        files.append(name)
    manifest = {
        "format": "locals-v1",
        "lambdas": [float(l) for l in local.lambdas],
        "models": files,
    }
    with open(os.path.join(args.out_dir, LOCALS_MANIFEST), "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    return 0


def _load_locals(locals_dir: str) -> aggregate.LocalEstimates:
    path = os.path.join(locals_dir, LOCALS_MANIFEST)
    with open(path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    if not isinstance(manifest, dict) or manifest.get("format") != "locals-v1":
        raise SchemaError(f"{path} is not a locals-v1 manifest")
    estimates = [load_model(os.path.join(locals_dir, name)) for name in manifest["models"]]
    return aggregate.LocalEstimates(
        estimates=estimates, lambdas=np.asarray(manifest["lambdas"], dtype=float)
    )


def _cmd_aggregate(args) -> int:
    local = _load_locals(args.locals_dir)
    k = args.k if args.k is not None else local.order
    if args.method == "gmr":
        estimate = aggregate.aggregate_gmr(
            local, GmrConfig(K=k, tol=args.tol, max_iter=args.max_iter)
        )
    elif args.method == "median":
        estimate = aggregate.aggregate_median(local)
    elif args.method == "klavg":
        cfg = PmleConfig(K=k, tol=args.tol, n_starts=args.starts)
        estimate = aggregate.aggregate_klavg(
            local, cfg, args.seed, per_machine_n=args.per_machine_n
        )
    else:
        estimate = reduction.pool(local.estimates, local.lambdas)
    save_model(args.out, estimate)
    return 0


def _require_args(args, names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise SchemaError(f"--metric {args.metric} requires --" + ", --".join(missing))


def _cmd_eval(args) -> int:
    if args.metric == "w1":
        _require_args(args, ["model", "truth"])
        value = metrics.w1_distance(load_model(args.model), load_model(args.truth))
    elif args.metric == "mcr":
        _require_args(args, ["model", "truth", "data"])
        estimate = load_model(args.model)
        truth = load_model(args.truth)
        sample = load_data(args.data)
        sigma = metrics.align_labels(estimate, truth)
        value = metrics.misclassification_rate(estimate, sample, sigma)
    else:
        _require_args(args, ["labels-a", "labels-b"])
        value = metrics.ari(load_labels(args.labels_a), load_labels(args.labels_b))
    print(repr(float(value)))
    return 0


def _cmd_experiment(args) -> int:
    with open(args.config, encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}") from None
    cfg = ExperimentConfig.from_dict(doc)
    scores = run_experiment(cfg, threads=_threads(args))
    write_report(args.out or cfg.output, scores)
    return 0


_COMMANDS = {
    "gen-model": _cmd_gen_model,
    "gen-data": _cmd_gen_data,
    "split": _cmd_split,
    "fit": _cmd_fit,
    "fit-local": _cmd_fit_local,
    "aggregate": _cmd_aggregate,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": message, "kind": kind}) + "\n")
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SchemaError, FileNotFoundError) as exc:
        return _fail("schema", str(exc), 2)
    except ValueError as exc:
        return _fail("schema", str(exc), 2)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        return _fail("numeric", str(exc), 3)


if __name__ == "__main__":
    sys.exit(main())
