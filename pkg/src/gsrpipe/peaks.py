"""Phasic low-pass filtering, response-window detection, and peak features.

The stimulus-response extraction runs in four steps: low-pass the phasic
component with a Butterworth filter, scan for onset/offset crossings, keep
windows that last long enough to be stimulus-driven, and measure the peak
inside each window on the preprocessed conductance signal itself.  The
per-window summary is the statistical feature triple (peak count, signal
mean, largest peak amplitude).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trace import LabeledWindow, SignalTrace


@dataclass(frozen=True)
class FilterCoefficients:
    """Direct-form IIR coefficients, a[0] normalized to 1."""

    b: np.ndarray
    a: np.ndarray
    order: int
    cutoff_hz: float
    fs: float

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        a = np.asarray(self.a, dtype=np.float64)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)
        if a[0] != 1.0:
            raise ValueError("feedback coefficients must be normalized (a[0] = 1)")
        poles = np.roots(a)
        if poles.size and np.abs(poles).max() >= 1.0:
            raise ValueError("unstable filter: pole on or outside the unit circle")
        dc = b.sum() / a.sum()
        if abs(dc - 1.0) > 1e-9:
            raise ValueError(f"DC gain {dc!r} not 1 within 1e-9")


@dataclass(frozen=True)
class PeakConfig:
    """Thresholds of the response-window procedure plus the filter choice.

    ``cutoff_hz = None`` resolves per trace: 5 Hz, clamped to 0.45 * fs when
    that would reach Nyquist (fs <= 10 Hz).
    """

    onset_threshold: float = 0.01
    offset_threshold: float = 0.0
    duration_threshold_s: float = 1.0
    amplitude_threshold: float = 0.005
    butterworth_order: int = 2
    cutoff_hz: float | None = None

    def __post_init__(self):
        if self.duration_threshold_s <= 0:
            raise ValueError("duration_threshold_s must be positive")
        if self.amplitude_threshold < 0:
            raise ValueError("amplitude_threshold must be >= 0")
        if self.onset_threshold <= self.offset_threshold:
            raise ValueError("onset_threshold must exceed offset_threshold")
        if not 1 <= self.butterworth_order <= 4:
            raise ValueError("butterworth_order must be in 1..4")

    def effective_cutoff_hz(self, fs: float) -> float:
        if self.cutoff_hz is not None:
            return self.cutoff_hz
        return 5.0 if fs > 10.0 else 0.45 * fs


@dataclass(frozen=True)
class ResponseWindow:
    """One onset-to-offset excursion of the filtered phasic signal."""

    onset_index: int
    offset_index: int
    onset_s: float
    offset_s: float

    def __post_init__(self):
        if not self.onset_index < self.offset_index:
            raise ValueError("window must span at least one sample past its onset")

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


@dataclass(frozen=True)
class Peak:
    """Maximum of the conductance signal inside one response window.

    ``amplitude`` is the max minus the signal value at the window onset.
    """

    index: int
    time_s: float
    amplitude: float
    window: ResponseWindow


@dataclass(frozen=True)
class StatFeatures:
    """Per-window statistical feature triple."""

    num_peaks: int
    mean_gsr: float
    max_peak_amp: float


def design_butterworth_lowpass(order: int, cutoff_hz: float, fs: float) -> FilterCoefficients:
    """Digital Butterworth low-pass via the pre-warped bilinear transform.

    The analog prototype's poles are placed on the unit circle, scaled by
    the pre-warped cutoff, and mapped through s -> 2*fs*(z-1)/(z+1); all
    zeros land at z = -1.  The numerator is rescaled so the DC gain is 1.
    """
    if not 1 <= order <= 4:
        raise ValueError("order must be in 1..4")
    if not 0 < cutoff_hz < fs / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, fs/2) for fs={fs}")

    k = np.arange(order)
    prototype = np.exp(1j * np.pi * (2.0 * k + order + 1.0) / (2.0 * order))
    warped = 2.0 * fs * np.tan(np.pi * cutoff_hz / fs)
    s_poles = warped * prototype
    z_poles = (2.0 * fs + s_poles) / (2.0 * fs - s_poles)

    a = np.real(np.poly(z_poles))
    b = np.real(np.poly(-np.ones(order)))
    b = b * (a.sum() / b.sum())
    return FilterCoefficients(b=b, a=a, order=order, cutoff_hz=cutoff_hz, fs=fs)


def apply_iir(coeffs: FilterCoefficients, trace: SignalTrace) -> SignalTrace:
    """Single causal forward pass with zero initial conditions.

    Plain direct-form recurrence, evaluated term by term in index order so
    the output is reproducible down to the last bit.
    """
    if coeffs.fs != trace.fs:
        raise ValueError(f"filter designed for fs={coeffs.fs}, trace has fs={trace.fs}")
    x = trace.samples
    b, a = coeffs.b, coeffs.a
    y = np.zeros_like(x)
    for i in range(x.size):
        acc = 0.0
        for j in range(b.size):
            if j <= i:
                acc += b[j] * x[i - j]
        for j in range(1, a.size):
            if j <= i:
                acc -= a[j] * y[i - j]
        y[i] = acc
    return SignalTrace(samples=y, fs=trace.fs)


def lowpass_phasic(phasic: SignalTrace, cfg: PeakConfig | None = None) -> SignalTrace:
    """Design the configured Butterworth filter for this trace and apply it."""
    cfg = cfg or PeakConfig()
    coeffs = design_butterworth_lowpass(
        cfg.butterworth_order, cfg.effective_cutoff_hz(phasic.fs), phasic.fs
    )
    return apply_iir(coeffs, phasic)


def detect_response_windows(
    phasic_filtered: SignalTrace, cfg: PeakConfig | None = None
) -> list[ResponseWindow]:
    """Scan for onset/offset threshold crossings and keep long-enough windows.

    An onset is a sample rising above the onset threshold from at-or-below
    it (sample 0 counts if already above); its offset is the first later
    sample at or below the offset threshold, or the final sample when the
    excursion never closes.  Windows shorter than the duration threshold
    are dropped as nonspecific responses, and scanning resumes after the
    offset, so windows never overlap.
    """
    cfg = cfg or PeakConfig()
    x = phasic_filtered.samples
    fs = phasic_filtered.fs
    n = x.size
    windows: list[ResponseWindow] = []
    i = 0
    while i < n:
        above = x[i] > cfg.onset_threshold
        crossed = above and (i == 0 or x[i - 1] <= cfg.onset_threshold)
        if not crossed:
            i += 1
            continue
        j = i + 1
        while j < n and x[j] > cfg.offset_threshold:
            j += 1
        offset = j if j < n else n - 1
        if offset > i and (offset - i) / fs >= cfg.duration_threshold_s:
            windows.append(
                ResponseWindow(
                    onset_index=i, offset_index=offset, onset_s=i / fs, offset_s=offset / fs
                )
            )
        i = offset + 1
    return windows


def extract_peaks(
    windows: list[ResponseWindow], signal: SignalTrace, cfg: PeakConfig | None = None
) -> list[Peak]:
    """Find the in-window maximum of the conductance signal per window.

    The amplitude is the max minus the signal value at onset; a window only
    yields a peak when that difference is strictly above the amplitude
    threshold.  Ties on the max go to the earliest index.
    """
    cfg = cfg or PeakConfig()
    x = signal.samples
    peaks: list[Peak] = []
    for w in windows:
        if w.onset_index < 0 or w.offset_index >= x.size:
            raise ValueError(
                f"window [{w.onset_index}, {w.offset_index}] outside signal of {x.size} samples"
            )
        seg = x[w.onset_index : w.offset_index + 1]
        rel = int(np.argmax(seg))
        amplitude = float(seg[rel] - x[w.onset_index])
        if amplitude > cfg.amplitude_threshold:
            idx = w.onset_index + rel
            peaks.append(
                Peak(index=idx, time_s=idx / signal.fs, amplitude=amplitude, window=w)
            )
    return peaks


def statistical_features(
    signal: SignalTrace, peaks: list[Peak], window: LabeledWindow
) -> StatFeatures:
    """Aggregate the peaks falling inside one labeled window.

    Membership is by peak index within the window's half-open sample range;
    mean_gsr averages the preprocessed signal over the same range.
    """
    start, end = window.sample_range
    inside = [p for p in peaks if start <= p.index < end]
    mean_gsr = float(signal.samples[start:end].mean())
    max_amp = max((p.amplitude for p in inside), default=0.0)
    return StatFeatures(num_peaks=len(inside), mean_gsr=mean_gsr, max_peak_amp=float(max_amp))
