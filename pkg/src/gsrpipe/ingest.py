"""Recording/config file formats and fixed-length window segmentation.

CSV schemas:

* recording: header ``t,gsr,label`` (label column optional, empty cell =
  unlabeled), ``t`` in seconds, strictly increasing and uniform within 1%
  jitter; the sampling rate is inferred as 1/median(dt).
* decomposition: header ``t,gsr,phasic,tonic,driver,residual``.
* features: header ``window_start_s,window_end_s,label,num_peaks,mean_gsr,
  max_peak_amp`` plus optional ``dl_0..dl_{D-1}`` learned-feature columns.

The config file is flat ``key = value`` text with ``#`` comments; unknown
keys are rejected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .decompose import Decomposition, DecompositionConfig
from .dlfeatures import TrainingConfig
from .peaks import PeakConfig, StatFeatures
from .trace import LabeledWindow, Recording, SignalTrace

FEATURE_COLUMNS = ("num_peaks", "mean_gsr", "max_peak_amp")


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the end-to-end pipeline, with stage configs nested."""

    target_hz: float = 20.0
    smoothing_window_s: float = 1.0
    window_s: float = 60.0
    stride_s: float = 10.0
    folds: int = 10
    seed: int = 42
    decomposition: DecompositionConfig = field(default_factory=DecompositionConfig)
    peaks: PeakConfig = field(default_factory=PeakConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if self.target_hz <= 0:
            raise ValueError("target_hz must be positive")
        if self.smoothing_window_s <= 0:
            raise ValueError("smoothing_window_s must be positive")
        if self.stride_s <= 0:
            raise ValueError("stride_s must be positive")
        if self.window_s < self.stride_s:
            raise ValueError("window_s must be >= stride_s")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


# flat config keys -> (sub-config attribute or None, field name, parser)
_CONFIG_KEYS: dict[str, tuple[str | None, str, type]] = {
    "target_hz": (None, "target_hz", float),
    "smoothing_window_s": (None, "smoothing_window_s", float),
    "window_s": (None, "window_s", float),
    "stride_s": (None, "stride_s", float),
    "folds": (None, "folds", int),
    "seed": (None, "seed", int),
    "tau0": ("decomposition", "tau0", float),
    "tau1": ("decomposition", "tau1", float),
    "knot_spacing_s": ("decomposition", "knot_spacing_s", float),
    "alpha": ("decomposition", "alpha", float),
    "gamma": ("decomposition", "gamma", float),
    "onset_threshold": ("peaks", "onset_threshold", float),
    "offset_threshold": ("peaks", "offset_threshold", float),
    "duration_threshold_s": ("peaks", "duration_threshold_s", float),
    "amplitude_threshold": ("peaks", "amplitude_threshold", float),
    "butterworth_order": ("peaks", "butterworth_order", int),
    "cutoff_hz": ("peaks", "cutoff_hz", float),
    "epochs": ("training", "epochs", int),
    "batch_size": ("training", "batch_size", int),
    "learning_rate": ("training", "learning_rate", float),
}


def config_key_help() -> str:
    """One line per config key, for --help output."""
    lines = []
    for key, (group, name, parser) in _CONFIG_KEYS.items():
        owner = {
            None: PipelineConfig,
            "decomposition": DecompositionConfig,
            "peaks": PeakConfig,
            "training": TrainingConfig,
        }[group]
        default = getattr(owner(), name)
        lines.append(f"  {key} ({parser.__name__}, default {default})")
    return "\n".join(lines)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a flat key = value config file; later lines win on repeats."""
    top: dict[str, object] = {}
    nested: dict[str, dict[str, object]] = {"decomposition": {}, "peaks": {}, "training": {}}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        group, name, parser = _CONFIG_KEYS[key]
        try:
            parsed = parser(value)
        except ValueError:
            raise ValueError(
                f"line {lineno}: cannot parse {key} = {value!r} as {parser.__name__}"
            ) from None
        if group is None:
            top[name] = parsed
        else:
            nested[group][name] = parsed
    kwargs: dict[str, object] = dict(top)
    if nested["decomposition"]:
        kwargs["decomposition"] = DecompositionConfig(**nested["decomposition"])
    if nested["peaks"]:
        kwargs["peaks"] = PeakConfig(**nested["peaks"])
    if nested["training"]:
        kwargs["training"] = TrainingConfig(**nested["training"])
    return PipelineConfig(**kwargs)


def parse_recording_csv(path: str | Path) -> Recording:
    """Load a ``t,gsr[,label]`` CSV, inferring fs from the timestamps."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty recording (no header)") from None
        header = [h.strip() for h in header]
        if header not in (["t", "gsr"], ["t", "gsr", "label"]):
            raise ValueError(f"{path}: expected header t,gsr[,label], got {header}")
        has_labels = len(header) == 3

        times: list[float] = []
        samples: list[float] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path} line {lineno}: expected {len(header)} fields")
            try:
                times.append(float(row[0]))
                samples.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{path} line {lineno}: non-numeric value") from None
            if has_labels:
                cell = row[2].strip()
                try:
                    labels.append(int(cell) if cell else -1)
                except ValueError:
                    raise ValueError(f"{path} line {lineno}: non-integer label") from None

    if not times:
        raise ValueError(f"{path}: empty recording")
    if len(times) == 1:
        raise ValueError(f"{path}: cannot infer sampling rate from a single row")

    t = np.asarray(times)
    dt = np.diff(t)
    bad = np.flatnonzero(dt <= 0)
    if bad.size:
        raise ValueError(f"{path} line {int(bad[0]) + 3}: timestamps not strictly increasing")
    med = float(np.median(dt))
    jitter = np.abs(dt - med) / med
    bad = np.flatnonzero(jitter > 0.01)
    if bad.size:
        raise ValueError(
            f"{path} line {int(bad[0]) + 3}: timestamp jitter {jitter[bad[0]]:.3f} above 1%"
        )
    return Recording(
        id=path.stem,
        trace=SignalTrace(samples=np.asarray(samples), fs=1.0 / med),
        labels=np.asarray(labels, dtype=np.int64) if has_labels else None,
    )


def write_recording_csv(path: str | Path, recording: Recording) -> None:
    """Write a recording with t = i/fs; floats keep full round-trip precision."""
    trace = recording.trace
    labels = recording.labels
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        if labels is None:
            writer.writerow(["t", "gsr"])
            for i, v in enumerate(trace.samples):
                writer.writerow([repr(i / trace.fs), repr(float(v))])
        else:
            writer.writerow(["t", "gsr", "label"])
            for i, v in enumerate(trace.samples):
                writer.writerow([repr(i / trace.fs), repr(float(v)), int(labels[i])])


def write_decomposition_csv(path: str | Path, signal: SignalTrace, dec: Decomposition) -> None:
    """Plot-ready component dump; a comment line flags non-converged runs."""
    with Path(path).open("w", newline="") as fh:
        if not dec.converged:
            fh.write(f"# converged=false status={dec.solver_status}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "gsr", "phasic", "tonic", "driver", "residual"])
        fs = signal.fs
        cols = (signal, dec.phasic, dec.tonic, dec.driver, dec.residual)
        for i in range(len(signal)):
            writer.writerow([repr(i / fs)] + [repr(float(c.samples[i])) for c in cols])


def segment_windows(
    recording: Recording, window_s: float = 60.0, stride_s: float = 10.0
) -> list[LabeledWindow]:
    """Cut label-pure fixed-length windows at every stride offset.

    Window k starts at sample round(k * stride_s * fs) and spans
    round(window_s * fs) samples; it is kept only when it lies fully inside
    the recording and every sample in it carries the same 0 or 1 label.
    """
    if recording.labels is None:
        raise ValueError(f"recording {recording.id!r} has no labels to window")
    if stride_s <= 0:
        raise ValueError("stride_s must be positive")
    if window_s < stride_s:
        raise ValueError("window_s must be >= stride_s")
    fs = recording.trace.fs
    n = len(recording.trace)
    length = int(round(window_s * fs))
    labels = recording.labels
    windows: list[LabeledWindow] = []
    k = 0
    while True:
        start = int(round(k * stride_s * fs))
        end = start + length
        if end > n:
            break
        k += 1
        window_labels = labels[start:end]
        first = window_labels[0]
        if first not in (0, 1) or not (window_labels == first).all():
            continue
        windows.append(
            LabeledWindow(
                recording_id=recording.id,
                start_s=start / fs,
                end_s=end / fs,
                sample_range=(start, end),
                label=int(first),
            )
        )
    return windows


@dataclass(frozen=True)
class FeatureTable:
    """Contents of one or more feature CSVs, split by feature set."""

    start_s: np.ndarray
    end_s: np.ndarray
    y: np.ndarray
    statistical: np.ndarray
    deep: np.ndarray | None

    @property
    def n_windows(self) -> int:
        return self.y.size


def write_features_csv(
    path: str | Path,
    windows: list[LabeledWindow],
    features: list[StatFeatures],
    deep: np.ndarray | None = None,
) -> None:
    """Per-window feature rows; deep columns appended as dl_0..dl_{D-1}."""
    if len(windows) != len(features):
        raise ValueError(f"{len(windows)} windows vs {len(features)} feature rows")
    if deep is not None and deep.shape[0] != len(windows):
        raise ValueError(f"{len(windows)} windows vs {deep.shape[0]} deep feature rows")
    header = ["window_start_s", "window_end_s", "label", *FEATURE_COLUMNS]
    if deep is not None:
        header += [f"dl_{j}" for j in range(deep.shape[1])]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, (w, f) in enumerate(zip(windows, features)):
            row = [
                repr(w.start_s),
                repr(w.end_s),
                w.label,
                f.num_peaks,
                repr(f.mean_gsr),
                repr(f.max_peak_amp),
            ]
            if deep is not None:
                row += [repr(float(v)) for v in deep[i]]
            writer.writerow(row)


def read_features_csv(paths: list[str | Path]) -> FeatureTable:
    """Load and concatenate feature CSVs; all files must share one schema."""
    if not paths:
        raise ValueError("no feature files given")
    expected_header: list[str] | None = None
    start, end, y, stat, deep = [], [], [], [], []
    for path in paths:
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty feature file") from None
            base = ["window_start_s", "window_end_s", "label", *FEATURE_COLUMNS]
            if header[: len(base)] != base or not all(
                h.startswith("dl_") for h in header[len(base) :]
            ):
                raise ValueError(f"{path}: unexpected feature header {header}")
            if expected_header is None:
                expected_header = header
            elif header != expected_header:
                raise ValueError(f"{path}: feature columns differ from the first file")
            n_deep = len(header) - len(base)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ValueError(f"{path} line {lineno}: expected {len(header)} fields")
                try:
                    start.append(float(row[0]))
                    end.append(float(row[1]))
                    y.append(int(row[2]))
                    stat.append([float(row[3]), float(row[4]), float(row[5])])
                    if n_deep:
                        deep.append([float(v) for v in row[6:]])
                except ValueError:
                    raise ValueError(f"{path} line {lineno}: non-numeric value") from None
    if not y:
        raise ValueError("feature files contain no windows")
    return FeatureTable(
        start_s=np.asarray(start),
        end_s=np.asarray(end),
        y=np.asarray(y, dtype=np.int64),
        statistical=np.asarray(stat),
        deep=np.asarray(deep) if deep else None,
    )
