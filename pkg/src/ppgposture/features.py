"""Per-pulse morphology features, orthostatic magnitude and chi-squared ranking.

Feature names without a view prefix are measured on the filtered view; the
``raw_`` and ``detrended_`` variants read the same landmarks on those views.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .recording import ActivityClass

# Order of decreasing importance as published; also the CSV column order.
FEATURE_NAMES = (
    "systolic_magnitude",
    "systolic_rise_gradient",
    "raw_systolic_amplitude",
    "systolic_amplitude",
    "peak_difference",
    "detrended_systolic_amplitude",
    "pulse_onset_magnitude",
    "raw_offset",
    "raw_orthostatic_magnitude",
    "pulse_width",
    "end_point_magnitude",
    "detrended_offset",
    "diastolic_amplitude",
    "raw_diastolic_amplitude",
    "systolic_phase",
    "diastolic_phase",
    "offset",
    "detrended_orthostatic_magnitude",
    "detrended_diastolic_amplitude",
    "diastolic_magnitude",
    "dicrotic_magnitude",
)
N_FEATURES = len(FEATURE_NAMES)
DEFAULT_DROP = ("dicrotic_magnitude",)
STATIONARY_WINDOW_S = 20.0
MOVEMENT_LABEL_WINDOW_S = 10.0
N_BINS = 10
META_COLUMNS = ("label", "pulse_index", "quality_flag")


class FeatureError(ValueError):
    pass


class Quality(enum.IntFlag):
    OK = 0
    DIASTOLIC_ABSENT = 1
    DICROTIC_ABSENT = 2
    DIASTOLIC_FALLBACK = 4
    ORDER_VIOLATION = 8


@dataclass
class FeatureVector:
    values: np.ndarray
    label: ActivityClass
    pulse_index: int
    quality_flag: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (N_FEATURES,):
            raise FeatureError(f"expected {N_FEATURES} feature values")

    def __getitem__(self, name):
        return float(self.values[FEATURE_NAMES.index(name)])

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


@dataclass(frozen=True)
class OrthostaticBaseline:
    raw: float
    detrended: float
    window: float = STATIONARY_WINDOW_S


@dataclass
class FeatureRanking:
    entries: list = field(default_factory=list)

    @property
    def names(self):
        return [n for n, _ in self.entries]

    def score(self, name):
        return dict(self.entries)[name]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def stationary_baseline(onset_times, magnitudes, window=STATIONARY_WINDOW_S):
    """Mean systolic magnitude over pulses whose onset lies in ``[0, window)``."""
    onset_times = np.asarray(onset_times, dtype=np.float64)
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    sel = (onset_times >= 0) & (onset_times < window)
    if np.count_nonzero(sel) < 3:
        raise FeatureError(
            f"only {np.count_nonzero(sel)} pulses in the {window:g} s stationary window; need 3"
        )
    return float(magnitudes[sel].mean())


def orthostatic_magnitude(peaks, window=STATIONARY_WINDOW_S, onset_times=None):
    """Systolic peak height above the stationary baseline, per pulse.

    ``peaks`` is a sequence of ``(t, m)`` pairs in recording time (seconds
    from the first sample). The stationary window is selected on
    ``onset_times`` when given, else on the peak times.
    """
    arr = np.asarray(peaks, dtype=np.float64).reshape(-1, 2)
    sel_t = arr[:, 0] if onset_times is None else np.asarray(onset_times, dtype=np.float64)
    base = stationary_baseline(sel_t, arr[:, 1], window)
    return arr[:, 1] - base


def label_pulses(onset_times, label, movement_onset=None, window=MOVEMENT_LABEL_WINDOW_S):
    """Per-pulse class: the movement label inside ``[movement_onset, +window)``, else Stationary."""
    label = ActivityClass.parse(label)
    t = np.asarray(onset_times, dtype=np.float64)
    out = [ActivityClass.STATIONARY] * t.shape[0]
    if label.is_movement:
        if movement_onset is None:
            raise FeatureError(f"{label.value} recording has no movement_onset")
        for i in np.flatnonzero((t >= movement_onset) & (t < movement_onset + window)):
            out[i] = label
    return out


def extract_features(pulse, pois, baseline, label=ActivityClass.STATIONARY):
    """The 21 features of one pulse from its per-view points of interest.

    ``pois`` maps ``raw``/``detrended``/``filtered`` to ``PointsOfInterest``
    and ``baseline`` is the recording's ``OrthostaticBaseline``. A missing
    diastolic peak zeroes the diastolic features; a missing notch splits the
    phases at the diastolic peak, or at the systolic peak if that is missing
    too. Both cases are recorded in ``quality_flag``.
    """
    f, r, d = pois["filtered"], pois["raw"], pois["detrended"]
    q = Quality.OK
    if f.diastolic is None:
        q |= Quality.DIASTOLIC_ABSENT
    elif f.diastolic_fallback_used:
        q |= Quality.DIASTOLIC_FALLBACK
    if f.dicrotic is None:
        q |= Quality.DICROTIC_ABSENT
    if not f.is_ordered():
        q |= Quality.ORDER_VIOLATION

    def amp(p, lm):
        return 0.0 if lm is None else lm.m - p.onset.m

    rise_t = f.systolic.t - f.onset.t
    if f.dicrotic is not None:
        split = f.dicrotic.t
    elif f.diastolic is not None:
        split = f.diastolic.t
    else:
        split = f.systolic.t
    v = {
        "systolic_magnitude": f.systolic.m,
        "systolic_rise_gradient": (f.systolic.m - f.onset.m) / rise_t if rise_t > 0 else 0.0,
        "raw_systolic_amplitude": amp(r, r.systolic),
        "systolic_amplitude": amp(f, f.systolic),
        "peak_difference": 0.0 if f.diastolic is None else f.systolic.m - f.diastolic.m,
        "detrended_systolic_amplitude": amp(d, d.systolic),
        "pulse_onset_magnitude": f.onset.m,
        "raw_offset": r.end.m - r.onset.m,
        "raw_orthostatic_magnitude": r.systolic.m - baseline.raw,
        "pulse_width": f.end.t - f.onset.t,
        "end_point_magnitude": f.end.m,
        "detrended_offset": d.end.m - d.onset.m,
        "diastolic_amplitude": amp(f, f.diastolic),
        "raw_diastolic_amplitude": amp(r, r.diastolic),
        "systolic_phase": split - f.onset.t,
        "diastolic_phase": f.end.t - split,
        "offset": f.end.m - f.onset.m,
        "detrended_orthostatic_magnitude": d.systolic.m - baseline.detrended,
        "detrended_diastolic_amplitude": amp(d, d.diastolic),
        "diastolic_magnitude": 0.0 if f.diastolic is None else f.diastolic.m,
        "dicrotic_magnitude": 0.0 if f.dicrotic is None else f.dicrotic.m,
    }
    return FeatureVector(
        values=np.array([v[n] for n in FEATURE_NAMES]),
        label=ActivityClass.parse(label),
        pulse_index=pulse.index,
        quality_flag=int(q),
    )


def equal_frequency_bins(values, n_bins=N_BINS):
    """Bin index in ``[0, n_bins)`` from ranks; tied values share a bin.

    Depends only on the rank order, so any strictly increasing transform of
    ``values`` yields the same bins.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    r = rankdata(x, method="min")
    return ((r - 1) * n_bins // n).astype(np.int64)


def contingency_table(bins, labels):
    """Bin-by-class count matrix; classes appear in sorted order of their codes."""
    bins = np.asarray(bins)
    _, b = np.unique(bins, return_inverse=True)
    _, c = np.unique(np.asarray(labels), return_inverse=True)
    table = np.zeros((b.max() + 1, c.max() + 1), dtype=np.int64)
    np.add.at(table, (b, c), 1)
    return table


def chi_squared_statistic(table):
    """Pearson statistic sum((O - E)^2 / E) with E = row total * column total / N."""
    obs = np.asarray(table, dtype=np.float64)
    total = obs.sum()
    if total <= 0:
        return 0.0
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / total
    nz = expected > 0
    return float(np.sum((obs[nz] - expected[nz]) ** 2 / expected[nz]))


def _label_codes(labels):
    return np.array([ActivityClass.parse(l).code if not isinstance(l, (int, np.integer)) else int(l)
                     for l in labels])


def chi_squared_scores(X, labels, names=FEATURE_NAMES, n_bins=N_BINS):
    """Rank features by the chi-squared statistic of their binned values against the class."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(names) or X.shape[1] == 0:
        raise FeatureError("X must be (n_rows, n_features) matching names")
    y = _label_codes(labels)
    if np.unique(y).size < 2:
        raise FeatureError("chi-squared ranking needs at least two classes")
    scores = []
    for j, name in enumerate(names):
        col = X[:, j]
        if np.unique(col).size < 2:
            scores.append((name, 0.0))
            continue
        scores.append((name, chi_squared_statistic(contingency_table(equal_frequency_bins(col, n_bins), y))))
    # stable sort keeps the input order among equal scores
    scores.sort(key=lambda e: -e[1])
    return FeatureRanking(scores)


def select_features(ranking, drop=DEFAULT_DROP, names=FEATURE_NAMES):
    """Boolean mask over ``names`` that excludes ``drop``."""
    known = set(ranking.names) if ranking is not None else set(names)
    unknown = [d for d in drop if d not in known or d not in names]
    if unknown:
        raise FeatureError(f"unknown feature(s) to drop: {', '.join(unknown)}")
    mask = np.array([n not in set(drop) for n in names])
    if not mask.any():
        raise FeatureError("dropping every feature leaves nothing to train on")
    return mask


@dataclass
class FeatureTable:
    """Row-aligned feature matrix with per-pulse label, index and quality flag."""

    X: np.ndarray
    labels: list
    pulse_index: np.ndarray
    quality_flag: np.ndarray
    names: tuple = FEATURE_NAMES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(self.names))
        self.labels = [ActivityClass.parse(l) for l in self.labels]
        self.pulse_index = np.asarray(self.pulse_index, dtype=np.int64)
        self.quality_flag = np.asarray(self.quality_flag, dtype=np.int64)
        n = self.X.shape[0]
        if not len(self.labels) == self.pulse_index.shape[0] == self.quality_flag.shape[0] == n:
            raise FeatureError("feature table columns have different lengths")

    def __len__(self):
        return self.X.shape[0]

    @property
    def y(self):
        return np.array([l.code for l in self.labels], dtype=np.int64)

    @classmethod
    def from_vectors(cls, vectors):
        vectors = list(vectors)
        return cls(
            X=np.array([v.values for v in vectors]).reshape(-1, N_FEATURES),
            labels=[v.label for v in vectors],
            pulse_index=[v.pulse_index for v in vectors],
            quality_flag=[v.quality_flag for v in vectors],
        )

    @classmethod
    def concat(cls, tables):
        tables = list(tables)
        if not tables:
            return cls(np.empty((0, N_FEATURES)), [], [], [])
        return cls(
            X=np.vstack([t.X for t in tables]),
            labels=[l for t in tables for l in t.labels],
            pulse_index=np.concatenate([t.pulse_index for t in tables]),
            quality_flag=np.concatenate([t.quality_flag for t in tables]),
            names=tables[0].names,
        )


def write_feature_csv(table, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(table.names) + list(META_COLUMNS))
        for row, lab, idx, q in zip(table.X, table.labels, table.pulse_index, table.quality_flag):
            w.writerow([repr(float(v)) for v in row] + [lab.value, int(idx), int(q)])


def read_feature_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise FeatureError(f"{path}: empty feature file")
    header = rows[0]
    if tuple(header[-3:]) != META_COLUMNS:
        raise FeatureError(f"{path}: last columns must be {', '.join(META_COLUMNS)}")
    names = tuple(header[:-3])
    body = rows[1:]
    try:
        X = np.array([[float(v) for v in r[:-3]] for r in body]).reshape(-1, len(names))
        labels = [ActivityClass.parse(r[-3]) for r in body]
        idx = [int(r[-2]) for r in body]
        q = [int(r[-1]) for r in body]
    except (ValueError, IndexError) as exc:
        raise FeatureError(f"{path}: malformed feature row ({exc})") from exc
    return FeatureTable(X, labels, idx, q, names=names)
