import numpy as np
import pytest

from gsrpipe.synthetic import (
    biexp_pulse,
    inject_pulses,
    labeled_recording,
    tonic_drift,
    two_pulse_trace,
    window_dataset,
)


def test_biexp_pulse_is_normalized_bump():
    pulse = biexp_pulse(fs=20.0)
    assert pulse.max() == pytest.approx(1.0)
    assert pulse[0] == pytest.approx(0.0)
    assert np.all(pulse >= 0.0)
    peak = int(np.argmax(pulse))
    assert 0 < peak < pulse.size - 1


def test_inject_pulses_adds_at_onsets():
    base = np.zeros(200)
    out = inject_pulses(base, fs=4.0, onsets_s=[10.0], amplitudes=0.5)
    assert out[:40].max() == 0.0
    assert out[40:].max() == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(ValueError):
        inject_pulses(base, fs=4.0, onsets_s=[100.0], amplitudes=0.5)


def test_two_pulse_trace_shape():
    tr = two_pulse_trace()
    assert tr.fs == 20.0
    assert len(tr) == 1200


def test_labeled_recording_structure():
    rec = labeled_recording("s1", seed=0)
    n = len(rec.trace)
    assert rec.trace.fs == 4.0
    assert n == 2400
    half = n // 2
    assert np.all(rec.labels[:half] == 0)
    assert np.all(rec.labels[half:] == 1)
    # stress half carries the pulses
    assert rec.trace.samples[half:].max() > rec.trace.samples[:half].max()


def test_labeled_recording_seeded():
    a = labeled_recording("s", seed=3)
    b = labeled_recording("s", seed=3)
    c = labeled_recording("s", seed=4)
    assert np.array_equal(a.trace.samples, b.trace.samples)
    assert not np.array_equal(a.trace.samples, c.trace.samples)


def test_window_dataset_separable():
    X, y = window_dataset(n_per_class=6, length=100, fs=4.0, seed=0)
    assert X.shape == (12, 100)
    assert np.array_equal(np.sort(np.unique(y)), [0, 1])
    # class 1 windows carry pulses, so their range is visibly larger
    spread0 = (X[y == 0].max(axis=1) - X[y == 0].min(axis=1)).mean()
    spread1 = (X[y == 1].max(axis=1) - X[y == 1].min(axis=1)).mean()
    assert spread1 > 2.0 * spread0


def test_tonic_drift_is_slow():
    x = tonic_drift(1200, 20.0)
    assert np.abs(np.diff(x)).max() < 0.01
