"""Range-based outlier removal, linear detrending and zero-phase band-pass."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import signal

# Normalised band edges in cycles/sample (Nyquist = 0.5).
DEFAULT_F_LO = 0.0075
DEFAULT_F_HI = 0.2
FILTER_ORDER = 4
DEFAULT_BOUNDS = (1, 2**31 - 2)
MAX_REMOVED_FRACTION = 0.5


class PreprocessError(ValueError):
    pass


@dataclass
class SignalViews:
    raw: np.ndarray
    detrended: np.ndarray
    filtered: np.ndarray

    def __post_init__(self):
        if not len(self.raw) == len(self.detrended) == len(self.filtered):
            raise ValueError("signal views must have equal length")

    def __len__(self):
        return len(self.raw)


def remove_outliers(rec, lo=DEFAULT_BOUNDS[0], hi=DEFAULT_BOUNDS[1]):
    """Drop samples outside ``[lo, hi]``.

    The surviving samples keep their original timestamps. The number of
    removed samples is stored in ``metadata["outliers_removed"]``.
    """
    if not lo < hi:
        raise PreprocessError("outlier bounds need lo < hi")
    keep = (rec.values >= lo) & (rec.values <= hi)
    removed = int(np.count_nonzero(~keep))
    if len(rec) and removed > MAX_REMOVED_FRACTION * len(rec):
        raise PreprocessError(
            f"{removed} of {len(rec)} samples fall outside [{lo}, {hi}]; bounds look mis-ranged"
        )
    meta = dict(rec.metadata)
    meta["outliers_removed"] = removed
    return replace(rec, times=rec.times[keep], values=rec.values[keep], metadata=meta)


def detrend(series):
    """Subtract the least-squares straight line (which also removes the mean)."""
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise PreprocessError("detrend needs at least 2 samples")
    t = np.arange(n, dtype=np.float64)
    t -= t.mean()
    slope = np.dot(t, x - x.mean()) / np.dot(t, t)
    return x - x.mean() - slope * t


@lru_cache(maxsize=32)
def _design(f_lo, f_hi):
    # butter() takes edges relative to Nyquist, i.e. 2 * cycles/sample
    sos = signal.butter(FILTER_ORDER, [2.0 * f_lo, 2.0 * f_hi], btype="bandpass", output="sos")
    return sos, _impulse_length(sos)


def _impulse_length(sos, energy=1.0 - 1e-6):
    n = 256
    while True:
        imp = np.zeros(n)
        imp[0] = 1.0
        h = signal.sosfilt(sos, imp)
        cum = np.cumsum(h**2)
        if cum[-1] > 0 and cum[-n // 4] / cum[-1] >= energy:
            return int(np.searchsorted(cum, energy * cum[-1]) + 1)
        n *= 2


def impulse_length(f_lo=DEFAULT_F_LO, f_hi=DEFAULT_F_HI):
    """Samples holding all but 1e-6 of the band-pass impulse-response energy."""
    _check_band(f_lo, f_hi)
    return _design(float(f_lo), float(f_hi))[1]


def _check_band(f_lo, f_hi):
    if not 0 < f_lo < f_hi < 0.5:
        raise PreprocessError("band edges need 0 < f_lo < f_hi < 0.5 cycles/sample")


def bandpass(series, f_lo=DEFAULT_F_LO, f_hi=DEFAULT_F_HI):
    """Zero-phase Butterworth band-pass; edges in cycles/sample.

    The input is reflect-padded by one impulse length at each end and
    filtered forward then backward.
    """
    _check_band(f_lo, f_hi)
    sos, L = _design(float(f_lo), float(f_hi))
    x = np.asarray(series, dtype=np.float64)
    if x.shape[0] < 3 * L:
        raise PreprocessError(
            f"input of {x.shape[0]} samples is shorter than 3x the filter impulse length ({L})"
        )
    return signal.sosfiltfilt(sos, x, padtype="even", padlen=L)


def build_views(rec, f_lo=DEFAULT_F_LO, f_hi=DEFAULT_F_HI):
    raw = rec.values.astype(np.float64)
    det = detrend(raw)
    return SignalViews(raw=raw, detrended=det, filtered=bandpass(det, f_lo, f_hi))
