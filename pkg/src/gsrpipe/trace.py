"""Core data types shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VALID_LABELS = (-1, 0, 1)


@dataclass(frozen=True)
class SignalTrace:
    """Uniformly sampled scalar time series.

    Values are conductance in microsiemens for raw recordings, or
    dimensionless in [0, 1] after normalization.
    """

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("trace samples must be a non-empty 1-D sequence")
        if not np.isfinite(samples).all():
            raise ValueError("trace samples must be finite")
        if not (self.fs > 0):
            raise ValueError(f"sampling rate must be positive, got {self.fs}")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return len(self) / self.fs

    def times(self) -> np.ndarray:
        """Sample timestamps in seconds, starting at 0."""
        return np.arange(len(self)) / self.fs


@dataclass(frozen=True)
class Recording:
    """A named recording, optionally with one class label per sample.

    Labels: 0 = not-stressed, 1 = stressed, -1 = unlabeled.
    """

    id: str
    trace: SignalTrace
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            object.__setattr__(self, "labels", labels)
            if labels.shape != (len(self.trace),):
                raise ValueError(
                    f"labels length {labels.size} does not match "
                    f"{len(self.trace)} samples"
                )
            if not np.isin(labels, VALID_LABELS).all():
                bad = labels[~np.isin(labels, VALID_LABELS)][0]
                raise ValueError(f"label {bad} outside {{-1, 0, 1}}")


@dataclass(frozen=True)
class LabeledWindow:
    """A fixed-length, single-label analysis window inside a recording.

    ``sample_range`` is a half-open [start, stop) index interval into the
    (preprocessed) recording the window was cut from.
    """

    recording_id: str
    start_s: float
    end_s: float
    sample_range: tuple[int, int] = field(default=(0, 0))
    label: int = 0

    def __post_init__(self):
        start, stop = self.sample_range
        if not (0 <= start < stop):
            raise ValueError(f"invalid sample range {self.sample_range}")
        if self.label not in (0, 1):
            raise ValueError(f"window label must be 0 or 1, got {self.label}")

    @property
    def n_samples(self) -> int:
        return self.sample_range[1] - self.sample_range[0]
