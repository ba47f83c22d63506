"""Convergence-rate study for the reduction estimator.

For a grid of total sample sizes, fits local mixtures on M shards,
aggregates by reduction, and records the transport distance to the
truth.  Prints the OLS slope of log median distance against log N;
root-N convergence shows up as a slope near -0.5.

Usage:
    python scripts/rate_study.py --reps 20 --machines 4 --out rate.csv
"""

import argparse
import sys

import numpy as np

import shardmix as sm
from shardmix import aggregate, metrics, simulate
from shardmix.rng import derive


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[2**10, 2**12, 2**14, 2**16])
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--machines", type=int, default=4)
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--max-omega", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=515151)
    parser.add_argument("--out", default=None, help="per-replication CSV")
    args = parser.parse_args()

    rows = []
    w1 = np.zeros((args.reps, len(args.sizes)))
    for r in range(args.reps):
        truth = simulate.generate(sm.OverlapSpec(
            d=args.d, K=args.k, max_omega=args.max_omega,
            seed=derive(args.seed, "truth", r),
        ))
        for j, n in enumerate(args.sizes):
            data = truth.sample(n, derive(args.seed, "data", r, n)).points
            shards = aggregate.split(data, args.machines, derive(args.seed, "split", r, n))
            local = aggregate.fit_locals(
                shards, sm.PmleConfig(K=args.k, init=truth), derive(args.seed, "fit", r, n)
            )
            estimate = aggregate.aggregate_gmr(local, sm.GmrConfig(K=args.k))
            w1[r, j] = metrics.w1_distance(estimate, truth)
            rows.append((r, n, w1[r, j]))
        print(f"replication {r}: " + " ".join(f"{x:.5f}" for x in w1[r]))

    medians = np.median(w1, axis=0)
    slope = np.polyfit(np.log(args.sizes), np.log(medians), 1)[0]
    print("sizes:  ", args.sizes)
    print("medians:", medians.tolist())
    print(f"log-log slope: {slope:.4f}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write("replication,n,w1\n")
            for r, n, value in rows:
                handle.write(f"{r},{n},{value!r}\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
