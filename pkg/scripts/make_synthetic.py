"""Regenerate the bundled synthetic fixture under data/synthetic/.

Two 600 s recordings at 4 Hz, each a flat baseline phase followed by a
pulsed stress phase.  The pulse train lifts the mean of every stress
window clear of the baseline windows, which is what the end-to-end check
relies on.  Seeds are fixed so the files are reproducible byte for byte.
"""

from pathlib import Path

from gsrpipe.ingest import write_recording_csv
from gsrpipe.synthetic import labeled_recording

OUT_DIR = Path(__file__).resolve().parent.parent / "data" / "synthetic"

SUBJECTS = [
    ("subject01", 11),
    ("subject02", 22),
]


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for rec_id, seed in SUBJECTS:
        rec = labeled_recording(rec_id, fs=4.0, phase_s=300.0, seed=seed)
        path = OUT_DIR / f"{rec_id}.csv"
        write_recording_csv(path, rec)
        print(f"wrote {path} ({len(rec.trace)} samples at {rec.trace.fs:g} Hz)")


if __name__ == "__main__":
    main()
