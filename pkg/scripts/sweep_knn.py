"""Sweep kNN neighbor counts on the bundled fixture's statistical features.

Builds features once (preprocess + decompose + peak statistics per window),
then reports 10-fold cross-validated accuracy for k = 1..10, matching:

    gsrpipe features --in ... --out f.csv
    gsrpipe evaluate --features f.csv --models knn:k=1..10 --out m.json
"""

import sys
import tempfile
from pathlib import Path

from gsrpipe.cli import main
from gsrpipe.classify import ModelSpec, cross_validate
from gsrpipe.ingest import read_features_csv

ROOT = Path(__file__).resolve().parent.parent


def run() -> int:
    inputs = sorted((ROOT / "data" / "synthetic").glob("*.csv"))
    if not inputs:
        print("no fixture found; run scripts/make_synthetic.py first", file=sys.stderr)
        return 1
    with tempfile.TemporaryDirectory() as tmp:
        feature_paths = []
        for path in inputs:
            out = Path(tmp) / f"features_{path.stem}.csv"
            code = main(["features", "--in", str(path), "--out", str(out)])
            if code != 0:
                return code
            feature_paths.append(out)
        table = read_features_csv(feature_paths)
    print(f"\n{table.n_windows} windows, 10-fold CV, statistical features")
    print(f"{'k':>3} {'mean':>7} {'std':>7}")
    for k in range(1, 11):
        rep = cross_validate(
            ModelSpec(kind="knn", k=k), table.statistical, table.y, folds=10, seed=42
        )
        print(f"{k:>3} {rep.mean:>7.3f} {rep.std:>7.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
