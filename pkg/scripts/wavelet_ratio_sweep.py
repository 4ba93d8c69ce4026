"""Ratio ||V f + W_s f||_X / ||f||_{W^s_X} across spaces, wavelet families and grid levels."""

import argparse

from ballspace.grid import make_grid
from ballspace.harness import Battery, wavelet_equivalence_check
from ballspace.spaces import parse_space
from ballspace.weights import WeightSpec
from ballspace.wavelets import build_system

SPACES = ["L1.5", "Lp(3, w=cap)", "Lorentz(2, 1)", "Herz(0.2, 2, 3)", "Morrey(4, 2)",
          "Orlicz('t**2 * max(1, log(exp(1) + t))')"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spaces", nargs="+", default=SPACES)
    ap.add_argument("--families", nargs="+", default=["haar", "db2", "db3"])
    ap.add_argument("--levels", type=int, nargs="+", default=[8, 10])
    ap.add_argument("--s", type=float, default=0.0)
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--seed", type=int, default=8)
    args = ap.parse_args()
    weights = {"cap": WeightSpec("capped_power", {"alpha": 0.3})}
    print(f"{'space':<44s} {'wavelet':<7s} {'L':>3s} {'held min':>9s} {'held max':>9s} {'width':>7s}")
    for text in args.spaces:
        X = parse_space(text, weights)
        for fam in args.families:
            system = build_system(fam)
            if args.s >= system.K and args.s > 0:
                continue
            for L in args.levels:
                g = make_grid(1, [(-4.0, 4.0)], L)
                rep = wavelet_equivalence_check(X, args.s, system, g, Battery("mixed", args.count, args.seed), drift=None)
                a = rep.aggregates
                print(f"{text:<44s} {fam:<7s} {L:>3d} {a['held_min']:>9.4f} {a['held_max']:>9.4f} {a['held_width']:>7.3f}")


if __name__ == "__main__":
    main()
