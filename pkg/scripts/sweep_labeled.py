"""Baseline vs fairness-regularized model across labeled proportions."""

import argparse
import csv
from pathlib import Path

from eosp.data import SyntheticConfig, generate_synthetic
from eosp.experiment import RunSpec, sweep_labeled
from eosp.metrics import COLUMN_TITLES, COLUMNS


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--synthetic", default=Path(__file__).parent / "configs" / "nba_scale.toml")
    ap.add_argument("--model", default="gcn")
    ap.add_argument("--proportions", default="20,30,37.5,50")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/sweep")
    args = ap.parse_args(argv)

    ds = generate_synthetic(SyntheticConfig.from_toml(args.synthetic))
    props = [float(p) for p in args.proportions.split(",")]
    rows = sweep_labeled(ds, props, range(args.seeds), RunSpec(model=args.model), 1.0, 1.0, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Proportion", "LabeledCount", "Method", *COLUMN_TITLES, "MeanSeconds"])
        for row in rows:
            res = row["result"]
            secs = sum(row["wall_times"]) / len(row["wall_times"])
            w.writerow([f"{row['proportion']:g}", row["labeled_count"], res.method, *(res.cell(c) for c in COLUMNS), f"{secs:.3f}"])
    print((out / "sweep.csv").read_text(), end="")


if __name__ == "__main__":
    main()
