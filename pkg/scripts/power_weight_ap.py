"""A_p constants of |x|^alpha across grid levels, for the integrable and non-integrable regimes."""

import argparse

from ballspace.grid import make_grid
from ballspace.weights import CubeFamily, WeightSpec, ap_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, -0.5, -0.9, -1.5])
    ap.add_argument("--levels", type=int, nargs="+", default=list(range(4, 15, 2)))
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--box", type=float, nargs=2, default=[-1.0, 1.0])
    args = ap.parse_args()
    print("alpha  " + "  ".join(f"L={L:<9d}" for L in args.levels) + "  last/first")
    for a in args.alphas:
        vals = []
        for L in args.levels:
            g = make_grid(1, [args.box], L)
            vals.append(ap_constant(WeightSpec("power", {"alpha": a}).materialize(g), args.p, CubeFamily(g)).value)
        print(f"{a:<6g} " + "  ".join(f"{v:<11.5g}" for v in vals) + f"  {vals[-1] / vals[0]:.4g}")


if __name__ == "__main__":
    main()
