"""Compare aggregation methods across machine counts.

Generates one truth model, then for each requested number of machines
runs the full experiment pipeline (global fit, reduction, median,
KL-averaging, pooling) and prints median W1 / misclassification / ARI
per method.  A combined CSV keeps the per-replication rows.

Usage:
    python scripts/compare_aggregators.py --n 16384 --machines 4 16 --reps 10
"""

import argparse
import sys

import numpy as np

import shardmix as sm
from shardmix import simulate
from shardmix.experiment import (
    REPORT_HEADER,
    ExperimentConfig,
    run_experiment,
)
from shardmix.rng import derive


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2**14)
    parser.add_argument("--machines", type=int, nargs="+", default=[4, 16])
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--max-omega", type=float, default=0.05)
    parser.add_argument("--methods", nargs="+",
                        default=["global", "gmr", "median", "klavg"])
    parser.add_argument("--seed", type=int, default=626262)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    truth = simulate.generate(sm.OverlapSpec(
        d=args.d, K=args.k, max_omega=args.max_omega, seed=derive(args.seed, "truth"),
    ))

    all_rows = []
    for m in args.machines:
        cfg = ExperimentConfig(
            model=truth, N=args.n, M=m, K=args.k, d=args.d,
            seed=derive(args.seed, "experiment", m),
            methods=tuple(args.methods), replications=args.reps,
            output="", timing=True,
        )
        scores = run_experiment(cfg, threads=args.threads)
        all_rows.extend((m, s) for s in scores)
        print(f"--- M = {m} ---")
        for method in args.methods:
            rows = [s for s in scores if s.method == method]
            w1 = np.median([s.w1 for s in rows])
            mcr = np.median([s.mcr for s in rows])
            ari = np.median([s.ari for s in rows])
            secs = np.median([s.local_seconds + s.agg_seconds for s in rows])
            print(f"{method:>7}: median W1 {w1:.5f}  mcr {mcr:.4f}  "
                  f"ari {ari:.4f}  seconds {secs:.3f}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write("machines," + REPORT_HEADER + "\n")
            for m, s in all_rows:
                handle.write(
                    f"{m},{s.replication},{s.method},{s.w1!r},{s.mcr!r},"
                    f"{s.ari!r},{s.local_seconds!r},{s.agg_seconds!r}\n"
                )
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
