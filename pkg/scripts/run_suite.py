#!/usr/bin/env python3
"""Run the full check suite over the standard scenario family.

Usage: python scripts/run_suite.py [--base-size 64] [--seed 7]
       [--pair-cap 2000] [--out suite.jsonl]
"""

import argparse
import sys

from nhcz.harness import run_suite
from nhcz.reports import write_reports


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--base-size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--pair-cap", type=int, default=2000)
    ap.add_argument("--out", default="suite.jsonl")
    args = ap.parse_args()

    s = args.base_size
    config = {
        "scenarios": [
            {"kind": "line3-canonical", "size": 3, "seed": args.seed},
            {"kind": "grid", "size": s, "seed": args.seed},
            {"kind": "grid", "size": 2 * s, "seed": args.seed},
            {"kind": "cluster-spike", "size": s, "seed": args.seed},
            {"kind": "cluster-spike", "size": 2 * s, "seed": args.seed},
            {"kind": "power-floor-line", "size": s, "seed": args.seed},
            {"kind": "bergman-sample", "size": s, "seed": args.seed},
            {"kind": "bergman-sample", "size": 2 * s, "seed": args.seed},
        ],
        "checks": "all",
        "pair_cap": args.pair_cap,
        "seed": args.seed,
    }
    reports, code = run_suite(config)
    write_reports(reports, args.out)
    n_fail = sum(1 for r in reports if not r.passed and not r.vacuous
                 and r.check != "regression")
    n_drift = sum(1 for r in reports if not r.passed
                  and r.check == "regression")
    print("%d reports, %d failures, %d drift flags -> %s"
          % (len(reports), n_fail, n_drift, args.out))
    return code


if __name__ == "__main__":
    sys.exit(main())
