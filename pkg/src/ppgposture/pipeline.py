"""Recording -> pulses -> landmarks -> feature table, with the stage settings in one place."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import features, poi, preprocess, segment


@dataclass(frozen=True)
class PipelineConfig:
    f_lo: float = preprocess.DEFAULT_F_LO
    f_hi: float = preprocess.DEFAULT_F_HI
    outlier_lo: int = preprocess.DEFAULT_BOUNDS[0]
    outlier_hi: int = preprocess.DEFAULT_BOUNDS[1]
    stationary_window: float = features.STATIONARY_WINDOW_S
    label_window: float = features.MOVEMENT_LABEL_WINDOW_S


@dataclass
class ProcessedRecording:
    recording: object
    views: preprocess.SignalViews
    onsets: segment.OnsetResult
    pulses: list
    pois: list = field(default_factory=list)

    @property
    def onset_times(self):
        """Onset times in seconds from the first retained sample."""
        t = self.recording.times
        return t[self.onsets.onsets] - t[0]


def process_recording(rec, config=PipelineConfig()):
    """Clean, filter, segment and locate landmarks for every pulse."""
    rec = preprocess.remove_outliers(rec, config.outlier_lo, config.outlier_hi)
    views = preprocess.build_views(rec, config.f_lo, config.f_hi)
    onsets = segment.detect_onsets(views.filtered, rec.sample_rate)
    if onsets.onsets.size < 2:
        raise segment.SegmentationError(
            f"{rec.source_id or 'recording'}: fewer than two pulse onsets ({onsets.diagnostic or 'check the signal'})"
        )
    pulses = segment.slice_pulses(views, onsets.onsets, rec.sample_rate, rec.times)
    pois = [poi.locate(p) for p in pulses]
    return ProcessedRecording(rec, views, onsets, pulses, pois)


LANDMARKS = ("onset", "systolic", "dicrotic", "diastolic", "end")
PULSE_META = ("recording", "label", "movement_onset", "recording_t0", "pulse_index", "start_time",
              "n_samples", "diastolic_fallback")
PULSE_COLUMNS = PULSE_META + tuple(
    f"{v}_{lm}_{q}" for v in poi.VIEWS for lm in LANDMARKS for q in ("t", "m")
)


def pulse_rows(proc):
    """One flat row per pulse holding every landmark of every view."""
    rec = proc.recording
    rows = []
    for p, q in zip(proc.pulses, proc.pois):
        row = {
            "recording": rec.source_id,
            "label": rec.label.value,
            "movement_onset": rec.movement_onset,
            "recording_t0": float(rec.times[0]),
            "pulse_index": p.index,
            "start_time": p.start_time,
            "n_samples": len(p),
            "diastolic_fallback": int(q["filtered"].diastolic_fallback_used),
        }
        for v in poi.VIEWS:
            for lm in LANDMARKS:
                mark = getattr(q[v], lm)
                row[f"{v}_{lm}_t"] = None if mark is None else mark.t
                row[f"{v}_{lm}_m"] = None if mark is None else mark.m
        rows.append(row)
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_pulse_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PULSE_COLUMNS)
        for r in rows:
            w.writerow([_cell(r[c]) for c in PULSE_COLUMNS])


def read_pulse_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in PULSE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise features.FeatureError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = []
        for raw in reader:
            r = {}
            for c in PULSE_COLUMNS:
                v = raw[c]
                if c in ("recording", "label"):
                    r[c] = v
                elif c in ("pulse_index", "n_samples", "diastolic_fallback"):
                    r[c] = int(v)
                else:
                    r[c] = float(v) if v != "" else None
            rows.append(r)
    return rows


def _pois_from_row(r):
    out = {}
    for v in poi.VIEWS:
        marks = {}
        for lm in LANDMARKS:
            t = r[f"{v}_{lm}_t"]
            marks[lm] = None if t is None else poi.Landmark(-1, t, r[f"{v}_{lm}_m"])
        out[v] = poi.PointsOfInterest(diastolic_fallback_used=bool(r["diastolic_fallback"]), **marks)
    return out


@dataclass(frozen=True)
class _PulseRef:
    index: int


def table_from_pulse_rows(rows, config=PipelineConfig()):
    """Feature table from landmark rows, grouped by recording in first-seen order."""
    groups = {}
    for r in rows:
        groups.setdefault(r["recording"], []).append(r)
    tables = []
    for rid, rs in groups.items():
        onset_t = np.array([r["start_time"] - r["recording_t0"] for r in rs])
        pois = [_pois_from_row(r) for r in rs]
        base = features.OrthostaticBaseline(
            raw=features.stationary_baseline(onset_t, [q["raw"].systolic.m for q in pois], config.stationary_window),
            detrended=features.stationary_baseline(
                onset_t, [q["detrended"].systolic.m for q in pois], config.stationary_window
            ),
            window=config.stationary_window,
        )
        labels = features.label_pulses(onset_t, rs[0]["label"], rs[0]["movement_onset"], config.label_window)
        vecs = [features.extract_features(_PulseRef(r["pulse_index"]), q, base, lab)
                for r, q, lab in zip(rs, pois, labels)]
        tables.append(features.FeatureTable.from_vectors(vecs))
    return features.FeatureTable.concat(tables)


def recording_features(rec, config=PipelineConfig()):
    """Feature table of one recording, one row per pulse."""
    return table_from_pulse_rows(pulse_rows(process_recording(rec, config)), config)
