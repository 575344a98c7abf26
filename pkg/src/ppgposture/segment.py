"""Pulse onset detection and per-pulse slicing.

Onsets are local minima of the filtered signal that lie below a centred
moving-average baseline and sit more than half a pulse period after the
previously accepted onset. The half-period spacing is what keeps dicrotic
notches from being taken as onsets. When two candidates are closer than
that, the deeper one is kept. A pulse cut by the start of the record has no
accepted onset before its notch, so a leading minimum followed by a deeper one
within 0.75 periods is discarded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

PERIOD_MIN_S = 0.5
PERIOD_MAX_S = 2.0
MIN_AUTOCORR = 0.2
FALLBACK_PERIOD_S = 1.0
MIN_SIGNAL_S = 3.0
# first-pair gap, in periods, below which the leading minimum is taken for a notch
LEADING_GAP = 0.75


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodEstimate:
    samples: int
    confident: bool
    autocorr: float


@dataclass(frozen=True)
class OnsetResult:
    onsets: np.ndarray
    period: PeriodEstimate
    baseline: np.ndarray
    diagnostic: str = ""

    def __len__(self):
        return len(self.onsets)


@dataclass
class Pulse:
    index: int
    start_index: int
    sample_rate: float
    start_time: float
    raw: np.ndarray
    detrended: np.ndarray
    filtered: np.ndarray

    def __post_init__(self):
        if not len(self.raw) == len(self.detrended) == len(self.filtered) >= 2:
            raise ValueError("pulse views must share a length of at least 2")

    def __len__(self):
        return len(self.filtered)

    @property
    def end_time(self):
        return self.start_time + (len(self) - 1) / self.sample_rate

    def view(self, name):
        return getattr(self, name)


def moving_average_baseline(series, window):
    """Centred moving mean; the window shrinks symmetrically near the edges."""
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if window % 2 == 0:
        raise SegmentationError("moving-average window must be odd")
    if not 3 <= window <= n:
        raise SegmentationError(f"window {window} must lie in [3, {n}]")
    idx = np.arange(n)
    half = np.minimum(np.minimum(idx, n - 1 - idx), window // 2)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    return (csum[idx + half + 1] - csum[idx - half]) / (2 * half + 1)


def estimate_period(filtered, sample_rate):
    """Nominal pulse period from the highest autocorrelation peak in 0.5-2.0 s.

    Falls back to 1.0 s with ``confident=False`` when no peak reaches 0.2.
    """
    x = np.asarray(filtered, dtype=np.float64)
    n = x.shape[0]
    if n < MIN_SIGNAL_S * sample_rate:
        raise SegmentationError(f"need at least {MIN_SIGNAL_S:g} s of signal")
    fallback = PeriodEstimate(int(round(FALLBACK_PERIOD_S * sample_rate)), False, 0.0)
    x = x - x.mean()
    energy = np.dot(x, x)
    if energy <= 0:
        return fallback
    lo = max(1, int(math.floor(PERIOD_MIN_S * sample_rate)))
    hi = min(n - 2, int(math.ceil(PERIOD_MAX_S * sample_rate)))
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    spec = np.fft.rfft(x, nfft)
    ac = np.fft.irfft(spec * np.conj(spec), nfft)[: hi + 2] / energy
    seg = ac[lo - 1 : hi + 2]
    peaks = np.flatnonzero((seg[1:-1] > seg[:-2]) & (seg[1:-1] >= seg[2:])) + lo
    if peaks.size == 0:
        return fallback
    best = peaks[np.argmax(ac[peaks])]
    if ac[best] < MIN_AUTOCORR:
        return PeriodEstimate(fallback.samples, False, float(ac[best]))
    return PeriodEstimate(int(best), True, float(ac[best]))


def baseline_window(period_samples):
    w = int(period_samples)
    return max(3, w if w % 2 == 1 else w + 1)


def _drop_leading_notch(x, onsets, period_samples):
    """Drop a first onset that is really the notch of a truncated first pulse.

    The spacing rule suppresses a notch only when the onset before it was
    accepted, which never happens for a pulse cut by the start of the record.
    Such a notch sits well under one period before the first true onset and
    is shallower than it.
    """
    if onsets.size >= 2 and onsets[1] - onsets[0] < LEADING_GAP * period_samples and x[onsets[1]] < x[onsets[0]]:
        return onsets[1:]
    return onsets


def detect_onsets(filtered, sample_rate, period=None):
    """Indices of accepted pulse onsets on the filtered view.

    ``period`` (samples) may be supplied to skip the autocorrelation
    estimate. An empty result carries a ``diagnostic`` message.
    """
    x = np.asarray(filtered, dtype=np.float64)
    if x.shape[0] < MIN_SIGNAL_S * sample_rate:
        raise SegmentationError(f"need at least {MIN_SIGNAL_S:g} s of signal")
    est = estimate_period(x, sample_rate) if period is None else PeriodEstimate(int(period), True, 1.0)
    w = baseline_window(est.samples)
    if w > x.shape[0]:
        w = x.shape[0] if x.shape[0] % 2 else x.shape[0] - 1
    base = moving_average_baseline(x, w)
    onsets = kernels.select_onsets(x, base, est.samples / 2.0)
    onsets = _drop_leading_notch(x, onsets, est.samples)
    diag = ""
    if onsets.size == 0:
        diag = "no local minimum below the moving-average baseline"
        log.warning("onset detection found no pulses: %s", diag)
    elif not est.confident:
        diag = "low-confidence period estimate; fell back to 1.0 s"
    return OnsetResult(onsets=onsets, period=est, baseline=base, diagnostic=diag)


def slice_pulses(views, onsets, sample_rate, times=None):
    """Cut every view between consecutive onsets, end sample inclusive.

    ``times`` gives the sample timestamps; defaults to ``index / sample_rate``.
    """
    onsets = np.asarray(onsets, dtype=np.int64)
    if onsets.size < 2:
        raise SegmentationError("need at least two onsets to form a pulse")
    if np.any(np.diff(onsets) <= 0):
        raise SegmentationError("onsets must be strictly ascending")
    if onsets[0] < 0 or onsets[-1] >= len(views):
        raise SegmentationError("onset index outside the signal")
    pulses = []
    for k, (a, b) in enumerate(zip(onsets[:-1], onsets[1:])):
        sl = slice(int(a), int(b) + 1)
        pulses.append(
            Pulse(
                index=k,
                start_index=int(a),
                sample_rate=sample_rate,
                start_time=float(times[a]) if times is not None else a / sample_rate,
                raw=views.raw[sl],
                detrended=views.detrended[sl],
                filtered=views.filtered[sl],
            )
        )
    return pulses
