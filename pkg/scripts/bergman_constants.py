#!/usr/bin/env python3
"""Empirical operator constants on the Bergman-type sample at two sizes.

Prints each tracked constant at N and 2N with the drift ratio: weak (1,1)
of T, the Cotlar bound, L-infinity into RBMO, Hardy into L1, duality,
the commutator bound, and N versus sharp-maximal norms.
"""

import argparse

from nhcz.harness import check_n_vs_sharp, check_operator
from nhcz.scenarios import generate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--pair-cap", type=int, default=2000)
    args = ap.parse_args()

    cfg = {"pair_cap": args.pair_cap, "seed": 0}
    vals = {}
    for n in (args.size, 2 * args.size):
        scn = generate("bergman-sample", n, args.seed)
        for r in check_operator(scn, cfg) + check_n_vs_sharp(scn, cfg):
            for k, v in r.constants.items():
                vals.setdefault((r.check, k), {})[n] = float(v)
    print("%-22s %10s %10s %8s" % ("constant", "N=%d" % args.size,
                                   "N=%d" % (2 * args.size), "ratio"))
    for (c, k), d in sorted(vals.items()):
        lo, hi = min(d.values()), max(d.values())
        ratio = hi / lo if lo > 0 else float("inf")
        print("%-22s %10.4f %10.4f %8.2f %s"
              % ("%s.%s" % (c, k), d[args.size], d[2 * args.size], ratio,
                 "" if ratio <= 2 else "DRIFT"))


if __name__ == "__main__":
    main()
