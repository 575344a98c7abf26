import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal

from ppgposture import preprocess
from ppgposture.recording import Recording

F_MID = np.sqrt(preprocess.DEFAULT_F_LO * preprocess.DEFAULT_F_HI)


def _rec(values):
    values = np.asarray(values)
    return Recording(np.arange(values.size) / 100.0, values, 100.0)


def _gain_db(f, n=8000):
    k = np.arange(n)
    x = np.sin(2 * np.pi * f * k)
    y = preprocess.bandpass(x)
    core = slice(n // 4, 3 * n // 4)
    return 20 * np.log10(np.std(y[core]) / np.std(x[core])), x, y


def test_outliers_in_range_untouched():
    rec = _rec(np.arange(1, 101))
    out = preprocess.remove_outliers(rec)
    assert np.array_equal(out.values, rec.values)
    assert out.metadata["outliers_removed"] == 0


def test_outlier_single_removed():
    v = np.full(100, 500)
    v[40] = 2**31 - 1
    out = preprocess.remove_outliers(_rec(v))
    assert len(out) == 99
    assert 0.40 not in out.times
    assert np.all(out.values == 500)


def test_outliers_counted():
    rng = np.random.default_rng(0)
    v = rng.integers(100, 1000, 500)
    spikes = rng.choice(500, 3, replace=False)
    v[spikes] = 5000
    out = preprocess.remove_outliers(_rec(v), lo=1, hi=1000)
    assert out.metadata["outliers_removed"] == np.count_nonzero(v > 1000) == 3


def test_outliers_misranged_bounds():
    with pytest.raises(preprocess.PreprocessError):
        preprocess.remove_outliers(_rec(np.full(10, 5)), lo=100, hi=200)
    with pytest.raises(preprocess.PreprocessError):
        preprocess.remove_outliers(_rec(np.full(10, 5)), lo=10, hi=10)


def test_detrend_constant_and_ramp():
    assert np.allclose(preprocess.detrend(np.full(50, 5.0)), 0.0)
    assert np.allclose(preprocess.detrend(3.0 * np.arange(50) - 7.0), 0.0, atol=1e-9)


def test_detrend_sine_plus_ramp():
    t = np.arange(0, 10, 0.01)
    s = np.sin(2 * np.pi * 1.2 * t)
    out = preprocess.detrend(s + 10 * t)
    # oracle: the least-squares line through the mixture, from numpy
    coef = np.polyfit(np.arange(t.size), s + 10 * t, 1)
    oracle = s + 10 * t - np.polyval(coef, np.arange(t.size))
    assert np.sqrt(np.mean((out - oracle) ** 2)) < 1e-6
    assert np.sqrt(np.mean((out - (s - s.mean())) ** 2)) < 0.05


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(2, 300), elements=st.floats(-1e6, 1e6)))
def test_detrend_idempotent(x):
    once = preprocess.detrend(x)
    assert np.allclose(preprocess.detrend(once), once, atol=1e-9 * max(1.0, np.abs(x).max()))


def test_detrend_too_short():
    with pytest.raises(preprocess.PreprocessError):
        preprocess.detrend([1.0])


def test_impulse_length_frozen():
    # energy-criterion length of the default band-pass, measured once and frozen
    assert preprocess.impulse_length() == 331


def test_filter_matches_scipy_design():
    sos = signal.butter(4, [0.015, 0.4], btype="bandpass", output="sos")
    x = np.random.default_rng(1).standard_normal(3000)
    ref = signal.sosfiltfilt(sos, x, padtype="even", padlen=331)
    assert np.allclose(preprocess.bandpass(x), ref)


def test_inband_gain():
    g, _, _ = _gain_db(F_MID)
    assert abs(g) <= 1.0


def test_stopband_attenuation():
    g, _, _ = _gain_db(0.4)
    assert g <= -20.0


def test_dc_rejected():
    y = preprocess.bandpass(np.full(2000, 7.0))
    assert np.sqrt(np.mean(y**2)) < 0.01 * 7.0


def test_zero_phase():
    _, x, y = _gain_db(F_MID, n=4000)
    core = slice(1000, 3000)
    lags = np.arange(-20, 21)
    xc = [np.dot(x[core], np.roll(y, -k)[core]) for k in lags]
    assert abs(lags[int(np.argmax(xc))]) <= 1


@settings(max_examples=20, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**16))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 1200))
    lhs = preprocess.bandpass(a * x + b * y)
    rhs = a * preprocess.bandpass(x) + b * preprocess.bandpass(y)
    scale = max(np.abs(rhs).max(), 1e-12)
    assert np.abs(lhs - rhs).max() <= 1e-6 * scale + 1e-12


def test_too_short_for_filter():
    with pytest.raises(preprocess.PreprocessError):
        preprocess.bandpass(np.zeros(3 * 331 - 1))


@pytest.mark.parametrize("band", [(0.2, 0.1), (0.0, 0.2), (0.1, 0.5)])
def test_bad_band(band):
    with pytest.raises(preprocess.PreprocessError):
        preprocess.bandpass(np.zeros(2000), *band)


def test_views():
    rec = _rec(np.random.default_rng(2).integers(40000, 41000, 1500))
    v = preprocess.build_views(rec)
    assert len(v) == 1500
    assert np.allclose(v.detrended, preprocess.detrend(rec.values.astype(float)))
    assert np.allclose(v.filtered, preprocess.bandpass(v.detrended))
