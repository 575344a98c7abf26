"""Per-pulse landmarks: onset, systolic peak, dicrotic notch, diastolic peak, end.

Timing of the notch and the diastolic peak is detected once on the filtered
view and reused for the raw and detrended views, whose magnitudes are read at
the same sample. The systolic peak is the maximum of each view separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .segment import moving_average_baseline

VIEWS = ("raw", "detrended", "filtered")
MATCH_TOLERANCE = 3
END_EXCLUSION = 0.05
SMOOTH_WINDOW = 5


@dataclass(frozen=True)
class Landmark:
    index: int
    t: float
    m: float


@dataclass(frozen=True)
class PointsOfInterest:
    onset: Landmark
    end: Landmark
    systolic: Landmark
    dicrotic: Landmark | None
    diastolic: Landmark | None
    diastolic_fallback_used: bool = False

    def is_ordered(self):
        """onset < systolic < dicrotic <= diastolic < end, over present landmarks."""
        t = [self.onset.t, self.systolic.t]
        strict = [True]
        for lm, st in ((self.dicrotic, True), (self.diastolic, self.dicrotic is None)):
            if lm is not None:
                t.append(lm.t)
                strict.append(st)
        t.append(self.end.t)
        strict.append(True)
        return all((b > a) if st else (b >= a) for a, b, st in zip(t, t[1:], strict))


@dataclass(frozen=True)
class DiastolicResult:
    index: int | None
    magnitude: float | None
    fallback_used: bool
    zero_crossing: int | None = None


def find_systolic(view):
    """Global maximum of the pulse view; ``np.argmax`` returns the leftmost tie."""
    x = np.asarray(view, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty pulse")
    i = int(np.argmax(x))
    return i, float(x[i])


def derivatives(view, sample_rate):
    """First and second derivatives by central differences (one-sided at the ends)."""
    x = np.asarray(view, dtype=np.float64)
    if x.shape[0] < 5:
        raise ValueError("derivatives need a pulse of at least 5 samples")
    d1 = np.gradient(x, 1.0 / sample_rate, edge_order=1)
    d2 = np.empty_like(x)
    d2[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) * sample_rate**2
    d2[0] = d2[1]
    d2[-1] = d2[-2]
    return d1, d2


def _strict_minima(x, lo, hi):
    """Indices i in (lo, hi) with x[i-1] > x[i] <= x[i+1]."""
    lo = max(lo, 0)
    hi = min(hi, x.shape[0] - 1)
    if hi - lo < 2:
        return np.empty(0, dtype=np.int64)
    mid = x[lo + 1 : hi]
    mask = (mid < x[lo:hi - 1]) & (mid <= x[lo + 2 : hi + 1])
    return np.flatnonzero(mask) + lo + 1


def _smoothed_derivatives(x, sample_rate):
    d1, _ = derivatives(x, sample_rate)
    d1s = moving_average_baseline(d1, SMOOTH_WINDOW)
    d2s = np.gradient(d1s, 1.0 / sample_rate, edge_order=1)
    return d1s, d2s


def _derivative_noise(x, sample_rate):
    """Noise scale of the smoothed first derivative of ``x``.

    White noise of std ``s`` is estimated from the second difference of the
    pulse, which barely sees the smooth waveform, and propagated through
    the central difference plus 5-point mean, giving ``s * fs / 5``.
    """
    dd = np.diff(np.asarray(x, dtype=np.float64), 2)
    s = 1.4826 * float(np.median(np.abs(dd - np.median(dd)))) / math.sqrt(6.0)
    return s * sample_rate / SMOOTH_WINDOW


def falling_zero_crossings(d1s, lo, hi, band=0.0):
    """Falling zero crossings of ``d1s`` within ``[lo, hi)``.

    With ``band > 0`` a crossing needs the derivative to pass from above
    ``+band`` to below ``-band``, so sign chatter inside the band does not
    count. Each crossing is placed at the sample of smallest ``|d1s|``
    between those two excursions.
    """
    out = []
    above = None
    for i in range(max(lo, 0), min(hi, d1s.shape[0])):
        v = d1s[i]
        if v > band:
            above = i
        elif v < -band or (band == 0.0 and v == 0.0):
            if above is not None:
                seg = d1s[above : i + 1]
                out.append(above + int(np.argmin(np.abs(seg))))
            above = None
    return out


def find_diastolic(view, sample_rate, systolic_index=None):
    """Diastolic peak by matching derivative landmarks.

    Candidates are falling zero crossings of the smoothed first derivative
    after the systolic peak, excluding the last 5% of the pulse; the
    rightmost is kept and returned. A local minimum of the second derivative
    within 3 samples confirms it; without one the result carries
    ``fallback_used=True``. The zero crossing is reported in both cases
    because the second-derivative minimum drifts toward the steeper flank
    of an asymmetric lobe.

    Zero crossings use a hysteresis band of one noise standard deviation of
    the smoothed derivative, so noise on the flat top of the diastolic lobe
    does not create spurious late crossings.
    """
    x = np.asarray(view, dtype=np.float64)
    n = x.shape[0]
    if systolic_index is None:
        systolic_index, _ = find_systolic(x)
    if n < SMOOTH_WINDOW:
        return DiastolicResult(None, None, False)
    d1s, d2s = _smoothed_derivatives(x, sample_rate)
    limit = n - 1 - max(1, math.ceil(END_EXCLUSION * n))
    # crossings inside the smoothing half-width belong to the systolic peak
    first = systolic_index + SMOOTH_WINDOW // 2 + 1
    zcs = falling_zero_crossings(d1s, first, limit, _derivative_noise(x, sample_rate))
    if not zcs:
        return DiastolicResult(None, None, False)
    zc = zcs[-1]
    minima = _strict_minima(d2s, zc - MATCH_TOLERANCE - 1, zc + MATCH_TOLERANCE + 1)
    minima = minima[np.abs(minima - zc) <= MATCH_TOLERANCE]
    return DiastolicResult(zc, float(x[zc]), minima.size == 0, zc)


def find_dicrotic(view, sample_rate, systolic_index, diastolic_index):
    """Notch between the systolic and diastolic peaks.

    Among local minima of the view strictly inside the interval, returns the
    one with the largest second derivative. A notch flattened into a
    shoulder has no local minimum; then the second-derivative maximum in the
    interval is used. Returns ``None`` if the diastolic peak is absent or the
    interval is empty.
    """
    if diastolic_index is None:
        return None
    x = np.asarray(view, dtype=np.float64)
    if diastolic_index - systolic_index < 2:
        return None
    _, d2 = derivatives(x, sample_rate)
    cand = _strict_minima(x, systolic_index, diastolic_index)
    if cand.size == 0:
        cand = np.arange(systolic_index + 1, diastolic_index)
    i = int(cand[np.argmax(d2[cand])])
    return i, float(x[i])


def _landmark(pulse, view, i):
    return Landmark(int(i), pulse.start_time + i / pulse.sample_rate, float(view[i]))


def locate(pulse):
    """Points of interest for the raw, detrended and filtered views of a pulse."""
    fs = pulse.sample_rate
    filt = pulse.filtered
    n = len(filt)
    sys_f, _ = find_systolic(filt)
    dia = find_diastolic(filt, fs, sys_f)
    dic = find_dicrotic(filt, fs, sys_f, dia.index)
    out = {}
    for name in VIEWS:
        v = pulse.view(name)
        s, _ = find_systolic(v)
        out[name] = PointsOfInterest(
            onset=_landmark(pulse, v, 0),
            end=_landmark(pulse, v, n - 1),
            systolic=_landmark(pulse, v, s),
            dicrotic=None if dic is None else _landmark(pulse, v, dic[0]),
            diastolic=None if dia.index is None else _landmark(pulse, v, dia.index),
            diastolic_fallback_used=dia.fallback_used,
        )
    return out
