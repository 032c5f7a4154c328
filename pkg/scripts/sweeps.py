"""Regime sweeps: Sobolev order l at fixed n, and expansion order k at fixed n.

    python scripts/sweeps.py --n 7 --l 0 0.25 0.5 1 2
    python scripts/sweeps.py --n 19 --k 0 1 2
"""

import argparse
import sys

from sdlab import experiments as ex


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=float, nargs="*", default=None, help="Sobolev orders to sweep")
    p.add_argument("--k", type=int, nargs="*", default=None, help="expansion orders to sweep")
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--jobs", type=int, default=4)
    args = p.parse_args(argv)
    if args.l:
        table = ex.threshold_sweep(args.n, args.l, eps=args.eps, jobs=args.jobs)
        print(f"n = {args.n}, l* = {table.threshold} ({float(table.threshold):g})")
        print(f"{'l':>6} {'regime':>16} {'norm slope':>11} {'expected':>9} {'case':>5} "
              f"{'resid slope':>12} {'expected':>9}")
        for row in table.rows:
            print(f"{row.parameter:6g} {row.regime:>16} {row.slope:11.4f} {row.expected:9.4f} "
                  f"{row.case:>5} {row.residual_slope:12.4f} {row.residual_expected:9.4f}")
        for a, b in table.regime_change:
            print(f"regime change between l = {a:g} and l = {b:g}")
    if args.k:
        table = ex.k_sweep(args.n, args.k, eps=args.eps, jobs=args.jobs)
        print(f"n = {args.n}, k* = {table.threshold} ({float(table.threshold):g})")
        print(f"{'k':>4} {'regime':>16} {'slope':>9} {'expected':>9}")
        for row in table.rows:
            print(f"{int(row.parameter):4d} {row.regime:>16} {row.slope:9.4f} {row.expected:9.4f}")
        for a, b in table.regime_change:
            print(f"saturation between k = {int(a)} and k = {int(b)}")
    if not (args.l or args.k):
        p.error("give --l and/or --k values")
    return 0


if __name__ == "__main__":
    sys.exit(main())
