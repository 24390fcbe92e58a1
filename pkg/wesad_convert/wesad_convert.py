"""Convert WESAD per-subject pickle archives to t,gsr,label CSV recordings.

Pulls the wrist EDA channel (4 Hz) out of an S<k>.pkl archive, maps each
sample to the 700 Hz protocol label via nearest-index lookup, keeps only
baseline (code 1 -> label 0) and stress (code 2 -> label 1) samples, and
writes one CSV per contiguous kept run so every output file is uniformly
sampled. Timestamps restart at 0 within each segment.

Usage:
    python wesad_convert.py --in S2.pkl [S3.pkl ...] --out-dir data/ [--subjects S2 S3]

Only the CSV schema is shared with the analysis tool; nothing is imported
from it.
"""

from __future__ import annotations

import argparse
import csv
import pickle
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EDA_HZ = 4.0
LABEL_HZ = 700.0
BASELINE_CODE = 1
STRESS_CODE = 2


@dataclass
class ConvertSummary:
    """What one subject conversion produced."""

    subject: str
    rows: int
    baseline_s: float
    stress_s: float
    files: list[Path] = field(default_factory=list)


def _load_subject(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Return (wrist EDA as 1-D float array, label codes as 1-D int array)."""
    try:
        with path.open("rb") as fh:
            data = pickle.load(fh, encoding="latin1")
    except FileNotFoundError:
        raise ValueError(f"cannot read {path}: no such file") from None
    except (pickle.UnpicklingError, EOFError) as exc:
        raise ValueError(f"cannot read {path}: not a pickle archive ({exc})") from None
    try:
        eda = np.asarray(data["signal"]["wrist"]["EDA"], dtype=np.float64).reshape(-1)
    except (KeyError, TypeError):
        raise ValueError(f"{path}: missing wrist EDA array (signal/wrist/EDA)") from None
    try:
        labels = np.asarray(data["label"]).reshape(-1).astype(np.int64)
    except (KeyError, TypeError):
        raise ValueError(f"{path}: missing label array") from None
    return eda, labels


def label_indices(n_eda: int) -> np.ndarray:
    """700 Hz label index for each 4 Hz EDA sample: round(t * 700)."""
    t = np.arange(n_eda) / EDA_HZ
    return np.rint(t * LABEL_HZ).astype(np.int64)


def convert_subject(in_path: str | Path, out_dir: str | Path) -> ConvertSummary:
    """Convert one subject archive; returns rows written and seconds kept."""
    in_path = Path(in_path)
    out_dir = Path(out_dir)
    subject = in_path.stem
    eda, labels = _load_subject(in_path)

    idx = label_indices(eda.size)
    if eda.size and idx[-1] >= labels.size:
        raise ValueError(
            f"{in_path}: label array too short ({labels.size} codes, "
            f"{idx[-1] + 1} implied by {eda.size} EDA samples)"
        )
    codes = labels[idx]
    mask = (codes == BASELINE_CODE) | (codes == STRESS_CODE)
    kept = np.flatnonzero(mask)

    summary = ConvertSummary(
        subject=subject,
        rows=int(kept.size),
        baseline_s=float(np.sum(codes[kept] == BASELINE_CODE)) / EDA_HZ,
        stress_s=float(np.sum(codes[kept] == STRESS_CODE)) / EDA_HZ,
    )
    if kept.size == 0:
        print(f"warning: {subject}: no baseline/stress samples", file=sys.stderr)
        return summary

    out_dir.mkdir(parents=True, exist_ok=True)
    segments = np.split(kept, np.flatnonzero(np.diff(kept) > 1) + 1)
    for seg_i, seg in enumerate(segments):
        out_path = out_dir / f"{subject}_seg{seg_i}.csv"
        with out_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "gsr", "label"])
            for k, j in enumerate(seg):
                label = 0 if codes[j] == BASELINE_CODE else 1
                writer.writerow([repr(k / EDA_HZ), repr(float(eda[j])), label])
        summary.files.append(out_path)
    return summary


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="WESAD pickle -> t,gsr,label CSV (wrist EDA, baseline/stress only)"
    )
    parser.add_argument("--in", dest="in_paths", nargs="+", required=True, metavar="PKL")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument(
        "--subjects",
        nargs="+",
        default=None,
        help="only convert these subject ids (matched against the file stem)",
    )
    args = parser.parse_args(argv)

    wanted = set(args.subjects) if args.subjects else None
    converted = 0
    for raw in args.in_paths:
        path = Path(raw)
        if wanted is not None and path.stem not in wanted:
            print(f"skipping {path.name}: not in --subjects")
            continue
        try:
            summary = convert_subject(path, args.out_dir)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        converted += 1
        print(
            f"{summary.subject}: {summary.rows} rows across "
            f"{len(summary.files)} segment(s), baseline {summary.baseline_s:g} s, "
            f"stress {summary.stress_s:g} s"
        )
    if converted == 0:
        print("error: nothing to convert", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
