"""Convert a raw tabular graph dataset into the nodes/edges CSV schema.

    python scripts/convert_tabular.py raw.csv raw_edges.txt scripts/configs/german_columns.toml out/

The column map names the label and sensitive columns, the raw values that
count as positive, and any columns to drop.  Remaining columns must be
numeric and become ``feat_*``.  The edge file holds whitespace- or
comma-separated node index pairs (row positions in the raw table).
"""

import argparse
import csv
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:
    import tomli as tomllib


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("table")
    ap.add_argument("edges")
    ap.add_argument("column_map")
    ap.add_argument("out")
    args = ap.parse_args(argv)
    with open(args.column_map, "rb") as fh:
        cmap = tomllib.load(fh)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with open(args.table, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        sys.exit(f"{args.table}: no rows")
    skip = {cmap["label"], cmap["sensitive"], *cmap.get("drop", [])}
    feats = [c for c in rows[0] if c not in skip]
    with (out / "nodes.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *(f"feat_{k}" for k in range(len(feats))), "label", "sensitive"])
        for i, row in enumerate(rows):
            y = int(row[cmap["label"]].strip() == str(cmap["label_positive"]))
            s = int(row[cmap["sensitive"]].strip() == str(cmap["sensitive_positive"]))
            w.writerow([i, *(float(row[c]) for c in feats), y, s])

    with open(args.edges) as src, (out / "edges.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"])
        for line in src:
            parts = line.replace(",", " ").split()
            if len(parts) >= 2:
                w.writerow([int(float(parts[0])), int(float(parts[1]))])
    print(f"wrote {len(rows)} nodes with {len(feats)} features to {out}")


if __name__ == "__main__":
    main()
