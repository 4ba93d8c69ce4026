"""Per-step slacks of the majorant argument for seeded triples, as a table or CSV."""

import argparse
import csv
import sys

from ballspace.grid import make_grid
from ballspace.spaces import parse_space
from ballspace.harness import proof_chain_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    ap.add_argument("--space", default=None, help="space expression; default L<p>")
    ap.add_argument("--triples", type=int, default=10)
    ap.add_argument("--L", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", action="store_true")
    args = ap.parse_args()
    grid = make_grid(1, [(-2.0, 2.0)], args.L)
    out = csv.writer(sys.stdout) if args.csv else None
    if out:
        out.writerow(["p", "probe", "step", "lhs", "rhs", "slack"])
    for p in args.p:
        X = parse_space(args.space or f"L{p:g}")
        rep = proof_chain_suite(p, X, grid, args.triples, args.seed)
        worst = {}
        for r in rep.records:
            if out:
                out.writerow([p, r["probe"], r["step"], repr(r["lhs"]), repr(r["rhs"]), repr(r["slack"])])
            worst[r["step"]] = min(worst.get(r["step"], float("inf")), r["slack"])
        if not out:
            print(f"p = {p:g}  {X}  {'PASS' if rep.passed else 'FAIL'}")
            for step, s in worst.items():
                print(f"  {step:<26s} {s: .3e}")


if __name__ == "__main__":
    main()
