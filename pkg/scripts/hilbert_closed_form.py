"""Discrete Hilbert transform of an interval indicator against log|(x+1)/(x-1)|, per grid level."""

import argparse

import numpy as np

from ballspace.grid import make_grid, sample
from ballspace.operators import riesz


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, nargs="+", default=[6, 8, 10, 12])
    ap.add_argument("--halfwidth", type=float, default=8.0)
    ap.add_argument("--guard", type=int, default=10, help="skip cells within this many h of the jumps")
    args = ap.parse_args()
    print(f"{'L':>3s} {'max rel err':>12s} {'rms rel err':>12s}")
    for L in args.levels:
        g = make_grid(1, [(-args.halfwidth, args.halfwidth)], L)
        x = g.centers(0)
        Hf = riesz(sample("chi(-1, 1, x)", g)).values
        exact = np.log(np.abs((x + 1) / (x - 1)))
        far = np.minimum(np.abs(x - 1), np.abs(x + 1)) >= args.guard * g.h
        rel = np.abs(Hf[far] - exact[far]) / np.abs(exact[far])
        print(f"{L:>3d} {rel.max():>12.3e} {np.sqrt(np.mean(rel**2)):>12.3e}")


if __name__ == "__main__":
    main()
