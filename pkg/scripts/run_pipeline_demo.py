"""Run the full pipeline on the bundled fixture and print the report.

Equivalent to:

    gsrpipe pipeline --in data/synthetic/*.csv --out-dir out/demo --force

but invoked through the library so it can be stepped through in a debugger.
"""

import json
import sys
from pathlib import Path

from gsrpipe.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run() -> int:
    inputs = sorted(str(p) for p in (ROOT / "data" / "synthetic").glob("*.csv"))
    if not inputs:
        print("no fixture found; run scripts/make_synthetic.py first", file=sys.stderr)
        return 1
    out_dir = ROOT / "out" / "demo"
    code = main(["pipeline", "--in", *inputs, "--out-dir", str(out_dir), "--force"])
    if code != 0:
        return code
    doc = json.loads((out_dir / "metrics.json").read_text())
    print(f"\nartifacts in {out_dir}")
    print(f"reports written: {len(doc['reports'])} (seed {doc['seed']})")
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
