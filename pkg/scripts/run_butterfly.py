#!/usr/bin/env python3
"""Sweep the hop-operator spectrum over a field-strength grid.

Writes one CSV row per (theta, eigenvalue) and prints the widest gap per
theta.  The spectrum depends on theta only through the fractional part
of 2*theta, so grids beyond [0, 1/2) repeat.
"""

import argparse
import csv

import numpy as np

from hyperhall.fuchsian import Multiplier, build_genus_g_group
from hyperhall.spectral import butterfly_sweep


def widest_gap(levels):
    levels = np.sort(np.asarray(levels))
    diffs = np.diff(levels)
    i = int(np.argmax(diffs))
    return float(levels[i]), float(levels[i + 1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--genus", type=int, default=2)
    ap.add_argument("--radius", type=int, default=2)
    ap.add_argument("--points", type=int, default=41)
    ap.add_argument("--max-theta", type=float, default=0.5)
    ap.add_argument("--out", default="butterfly.csv")
    args = ap.parse_args()

    pres = build_genus_g_group(args.genus)
    grid = np.linspace(0.0, args.max_theta, args.points)
    rows = butterfly_sweep(lambda t: Multiplier(t, pres), grid, args.radius)

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "index", "eigenvalue", "radius"])
        w.writerows(rows)

    by_theta = {}
    for theta, _, ev, _ in rows:
        by_theta.setdefault(theta, []).append(ev)
    print(f"{'theta':>8}  widest gap")
    for theta in sorted(by_theta):
        lo, hi = widest_gap(by_theta[theta])
        print(f"{theta:8.4f}  ({lo:+.4f}, {hi:+.4f})  width {hi - lo:.4f}")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
