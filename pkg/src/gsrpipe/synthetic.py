"""Synthetic conductance signals with known ground truth.

Used by the test suite and the bundled demo fixtures: biexponential
response pulses injected at known onsets over a smooth tonic baseline, plus
labeled two-phase recordings (flat baseline vs pulse-bearing stress) that
are separable by construction.
"""

from __future__ import annotations

import numpy as np

from .trace import Recording, SignalTrace


def biexp_pulse(fs: float, tau0: float = 2.0, tau1: float = 0.7, duration_s: float = 20.0):
    """Biexponential response kernel exp(-t/tau0) - exp(-t/tau1), peak 1."""
    t = np.arange(int(round(duration_s * fs))) / fs
    pulse = np.exp(-t / max(tau0, tau1)) - np.exp(-t / min(tau0, tau1))
    peak = pulse.max()
    if peak > 0:
        pulse /= peak
    return pulse


def inject_pulses(
    base: np.ndarray,
    fs: float,
    onsets_s: list[float],
    amplitudes: list[float] | float = 0.5,
    tau0: float = 2.0,
    tau1: float = 0.7,
) -> np.ndarray:
    """Add one response pulse per onset; pulses are truncated at the end."""
    out = np.asarray(base, dtype=np.float64).copy()
    if np.isscalar(amplitudes):
        amplitudes = [float(amplitudes)] * len(onsets_s)
    if len(amplitudes) != len(onsets_s):
        raise ValueError("one amplitude per onset required")
    pulse = biexp_pulse(fs, tau0, tau1)
    for onset_s, amp in zip(onsets_s, amplitudes):
        start = int(round(onset_s * fs))
        if not 0 <= start < out.size:
            raise ValueError(f"onset {onset_s} s outside the signal")
        stop = min(out.size, start + pulse.size)
        out[start:stop] += amp * pulse[: stop - start]
    return out


def tonic_drift(n: int, fs: float, level: float = 2.0, slope_per_s: float = 0.002):
    """Slow baseline: constant level, gentle ramp, one shallow sine cycle."""
    t = np.arange(n) / fs
    return level + slope_per_s * t + 0.05 * np.sin(2.0 * np.pi * t / max(t[-1], 1.0))


def two_pulse_trace(
    fs: float = 20.0,
    duration_s: float = 60.0,
    onsets_s: tuple[float, float] = (15.0, 35.0),
    amplitude: float = 0.6,
    tau0: float = 2.0,
    tau1: float = 0.7,
) -> SignalTrace:
    """Slow ramp plus two known-onset pulses; the decomposition target."""
    n = int(round(duration_s * fs))
    base = tonic_drift(n, fs)
    samples = inject_pulses(base, fs, list(onsets_s), amplitude, tau0, tau1)
    return SignalTrace(samples=samples, fs=fs)


def labeled_recording(
    rec_id: str,
    fs: float = 4.0,
    phase_s: float = 300.0,
    pulse_every_s: float = 25.0,
    pulse_amplitude: float = 0.8,
    seed: int = 0,
) -> Recording:
    """Two-phase recording: flat baseline (label 0), pulsed stress (label 1).

    The stress phase carries one response pulse every pulse_every_s with
    slight seeded jitter.  The pulse train lifts the mean of every full
    stress window well above any baseline window, so the two classes
    separate on window statistics.
    """
    rng = np.random.default_rng(seed)
    n = int(round(2 * phase_s * fs))
    base = tonic_drift(n, fs)
    onsets = []
    t = phase_s + 5.0
    while t < 2 * phase_s - 10.0:
        onsets.append(t + float(rng.uniform(-2.0, 2.0)))
        t += pulse_every_s
    samples = inject_pulses(base, fs, onsets, pulse_amplitude)
    labels = np.zeros(n, dtype=np.int64)
    labels[int(round(phase_s * fs)) :] = 1
    return Recording(id=rec_id, trace=SignalTrace(samples=samples, fs=fs), labels=labels)


def window_dataset(
    n_per_class: int = 20,
    length: int = 240,
    fs: float = 4.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Separable window set for network training tests.

    Class 0 windows are low-amplitude noise; class 1 windows add three
    response pulses at seeded positions.
    """
    rng = np.random.default_rng(seed)
    X = np.empty((2 * n_per_class, length))
    y = np.empty(2 * n_per_class, dtype=np.int64)
    duration_s = length / fs
    for i in range(2 * n_per_class):
        label = i % 2
        base = 0.02 * rng.standard_normal(length)
        if label:
            onsets = sorted(rng.uniform(1.0, duration_s - 8.0, size=3))
            base = inject_pulses(base, fs, list(onsets), 0.7)
        X[i] = base
        y[i] = label
    return X, y
