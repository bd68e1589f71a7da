#!/usr/bin/env python3
"""Sweep the adversarial graph family and report round counts.

For each k the script runs several seeded trials on gen_worstcase(k),
prints mean/min/max rounds plus the growth ratio against the previous
k, and fits rounds ~ c*k^2 on the largest size as a sanity readout.
Round counts on this family are coin-independent, so the min and max
columns should agree; a spread would itself be news.

Usage:
    python3 scripts/bench_worstcase.py --k-list 16,32,64,128 --trials 5
"""

import argparse
import sys
import time

from dispersim.engine import Outcome, SimulationConfig, TraceLevel, run
from dispersim.graph import gen_worstcase


def bench_one(k: int, trials: int, seed: int) -> dict:
    g = gen_worstcase(k)
    rounds = []
    t0 = time.monotonic()
    for trial in range(trials):
        res = run(
            SimulationConfig(
                graph=g,
                k=k,
                seed=seed * 10_007 + k * 101 + trial,
                trace_level=TraceLevel.NONE,
            )
        )
        if res.summary.outcome is not Outcome.DISPERSED_ALL_TERMINATED:
            raise SystemExit(f"k={k} trial={trial}: {res.summary.outcome.value}")
        rounds.append(res.summary.rounds)
    return {
        "k": k,
        "n": g.n,
        "m": g.num_edges,
        "mean": sum(rounds) / len(rounds),
        "min": min(rounds),
        "max": max(rounds),
        "secs": time.monotonic() - t0,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-list", default="16,32,64,128",
                    help="comma-separated sizes, each >= 7")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    ks = sorted({int(x) for x in args.k_list.split(",")})
    if any(k < 7 for k in ks):
        ap.error("the family needs k >= 7")

    print(f"{'k':>5} {'n':>5} {'m':>7} {'mean':>10} {'min':>8} {'max':>8} "
          f"{'ratio':>7} {'secs':>7}")
    prev = None
    rows = []
    for k in ks:
        row = bench_one(k, args.trials, args.seed)
        rows.append(row)
        ratio = row["mean"] / prev["mean"] if prev else float("nan")
        print(f"{row['k']:>5} {row['n']:>5} {row['m']:>7} {row['mean']:>10.1f} "
              f"{row['min']:>8} {row['max']:>8} {ratio:>7.3f} {row['secs']:>7.2f}")
        prev = row

    big = rows[-1]
    print(f"\nrounds/k^2 at k={big['k']}: {big['mean'] / big['k'] ** 2:.4f} "
          f"(a flat value across sizes means quadratic growth)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
