"""Feasible-region measure over a grid of group compositions (x, y)."""

import argparse
import csv
from pathlib import Path

import numpy as np

from eosp.feasibility import BaseRates, exact_region_measure, region_measure


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=19)
    ap.add_argument("--resolution", type=int, default=200)
    ap.add_argument("--out", default="results/feasibility_map.csv")
    args = ap.parse_args(argv)

    vals = np.linspace(0.05, 0.95, args.steps)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "grid_measure", "exact_measure"])
        lowest = (2.0, (0.0, 0.0))
        for x in vals:
            for y in vals:
                r = BaseRates(float(x), float(y))
                g, e = region_measure(r, args.resolution), exact_region_measure(r)
                w.writerow([f"{x:.3f}", f"{y:.3f}", f"{g:.6f}", f"{e:.6f}"])
                lowest = min(lowest, (e, (round(float(x), 3), round(float(y), 3))))
    print(f"wrote {args.out}; smallest exact measure {lowest[0]:.4f} at (x, y) = {lowest[1]}")


if __name__ == "__main__":
    main()
