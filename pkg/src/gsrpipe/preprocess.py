"""Signal conditioning: downsampling, smoothing, amplitude normalization.

The conditioning chain for raw skin-conductance recordings is
downsample -> centered moving average -> min-max normalization.  Label
streams attached to a recording are carried through the downsampling step
by per-bin consensus so that windows cut later never straddle re-labeled
samples silently.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .trace import Recording, SignalTrace

if TYPE_CHECKING:
    from .ingest import PipelineConfig


def _bin_indices(n: int, fs: float, target_hz: float) -> np.ndarray:
    """Destination bin per sample: bin k collects times in [k, k+1) / target_hz."""
    times = np.arange(n) / fs
    return np.floor(times * target_hz).astype(np.int64)


def downsample(trace: SignalTrace, target_hz: float) -> SignalTrace:
    """Average samples into bins of the target rate.

    Output sample k is the mean of all input samples whose time falls in
    [k/target_hz, (k+1)/target_hz).  When fs <= target_hz the trace is
    returned unchanged; there is no upsampling.
    """
    if target_hz <= 0:
        raise ValueError("target_hz must be positive")
    if trace.fs <= target_hz:
        return trace
    idx = _bin_indices(len(trace), trace.fs, target_hz)
    counts = np.bincount(idx)
    sums = np.bincount(idx, weights=trace.samples)
    return SignalTrace(samples=sums / counts, fs=target_hz)


def downsample_labels(labels: np.ndarray, fs: float, target_hz: float) -> np.ndarray:
    """Reduce a label stream with the same binning as :func:`downsample`.

    A bin keeps a label only when all its members agree; mixed bins become
    -1 (unlabeled) so later windowing cannot treat them as clean.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if fs <= target_hz:
        return labels.copy()
    idx = _bin_indices(labels.size, fs, target_hz)
    nbins = int(idx[-1]) + 1
    lo = np.full(nbins, np.iinfo(np.int64).max)
    hi = np.full(nbins, np.iinfo(np.int64).min)
    np.minimum.at(lo, idx, labels)
    np.maximum.at(hi, idx, labels)
    return np.where(lo == hi, lo, -1)


def moving_average(trace: SignalTrace, window_s: float) -> SignalTrace:
    """Centered moving average with edge truncation.

    The window spans round(window_s * fs) samples, forced odd so it centers
    on each sample; near the edges the mean runs over the samples that
    actually exist rather than padding.  Implemented with prefix sums so a
    window wider than the whole trace degrades gracefully to the global
    mean.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    w = int(round(window_s * trace.fs))
    if w % 2 == 0:
        w += 1
    if w <= 1:
        return trace
    half = w // 2
    x = trace.samples
    n = x.size
    prefix = np.concatenate([[0.0], np.cumsum(x)])
    lo = np.clip(np.arange(n) - half, 0, n)
    hi = np.clip(np.arange(n) + half + 1, 0, n)
    smoothed = (prefix[hi] - prefix[lo]) / (hi - lo)
    return SignalTrace(samples=smoothed, fs=trace.fs)


def min_max_normalize(trace: SignalTrace) -> SignalTrace:
    """Rescale to [0, 1]; a constant trace maps to all zeros."""
    x = trace.samples
    lo = x.min()
    span = x.max() - lo
    if span == 0.0:
        return SignalTrace(samples=np.zeros_like(x), fs=trace.fs)
    return SignalTrace(samples=(x - lo) / span, fs=trace.fs)


def preprocess(trace: SignalTrace, cfg: "PipelineConfig | None" = None) -> SignalTrace:
    """Full conditioning chain: downsample, smooth, normalize, in that order."""
    if cfg is None:
        from .ingest import PipelineConfig

        cfg = PipelineConfig()
    out = downsample(trace, cfg.target_hz)
    out = moving_average(out, cfg.smoothing_window_s)
    return min_max_normalize(out)


def preprocess_recording(recording: Recording, cfg: "PipelineConfig | None" = None) -> Recording:
    """Condition a recording, downsampling its label stream in lockstep."""
    if cfg is None:
        from .ingest import PipelineConfig

        cfg = PipelineConfig()
    trace = preprocess(recording.trace, cfg)
    labels = recording.labels
    if labels is not None:
        labels = downsample_labels(labels, recording.trace.fs, cfg.target_hz)
    return Recording(id=recording.id, trace=trace, labels=labels)
