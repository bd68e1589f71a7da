#!/usr/bin/env python3
"""Soak test: random connected graphs, full simulation, all checkers.

Each iteration draws n, edge count, k, and root from a master seed,
generates a connected port-labeled graph, runs the protocol, and passes
the trace through every checker. Any checker finding or non-dispersed
outcome is printed with enough parameters to replay it by hand, and the
script exits nonzero.

Usage:
    python3 scripts/run_corpus.py --runs 500 --seed 3
    python3 scripts/run_corpus.py --runs 50 --max-n 24 -v
"""

import argparse
import random
import sys
import time

from dispersim.checkers import run_all
from dispersim.engine import Outcome, SimulationConfig, parse_trace, run
from dispersim.graph import gen_random_connected


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--min-n", type=int, default=4)
    ap.add_argument("--max-n", type=int, default=64)
    ap.add_argument("-v", "--verbose", action="store_true",
                    help="print a line per run, not just failures")
    args = ap.parse_args(argv)

    master = random.Random(f"corpus:{args.seed}")
    failures = 0
    round_total = 0
    t0 = time.monotonic()
    for i in range(args.runs):
        n = master.randint(args.min_n, args.max_n)
        m = master.randint(n - 1, n * (n - 1) // 2)
        k = master.randint(1, n)
        root = master.randrange(n)
        params = f"run {i}: n={n} m={m} k={k} root={root} seed={i}"

        g = gen_random_connected(n, m, seed=i)
        res = run(SimulationConfig(graph=g, k=k, root=root, seed=i))
        s = res.summary
        round_total += s.rounds
        bad = []
        if s.outcome is not Outcome.DISPERSED_ALL_TERMINATED:
            bad.append(f"outcome={s.outcome.value}")
        for name, verdict in run_all(parse_trace(res.to_jsonl()), g).items():
            if not verdict.passed:
                bad.append(f"{name}: {verdict.findings[0]}")
        if bad:
            failures += 1
            print(f"FAIL {params}")
            for line in bad:
                print(f"     {line}")
        elif args.verbose:
            print(f"ok   {params} rounds={s.rounds}")

    elapsed = time.monotonic() - t0
    print(f"\n{args.runs - failures}/{args.runs} clean, "
          f"{round_total} total rounds, {elapsed:.1f}s")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
