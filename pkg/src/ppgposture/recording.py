"""Recording container and its on-disk CSV + JSON sidecar format."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class ActivityClass(str, Enum):
    STATIONARY = "Stationary"
    SIT_TO_STAND = "SitToStand"
    LIE_TO_STAND = "LieToStand"

    @classmethod
    def parse(cls, text):
        """Accept enum values, member names or CLI spellings (``lie-to-stand``)."""
        if isinstance(text, cls):
            return text
        key = str(text).strip().replace("-", "").replace("_", "").lower()
        for member in cls:
            if key in (member.value.lower(), member.name.replace("_", "").lower()):
                return member
        raise ValueError(f"unknown activity class: {text!r}")

    @property
    def is_movement(self):
        return self is not ActivityClass.STATIONARY

    @property
    def code(self):
        """Position in ``CLASS_ORDER``; the integer label used by classifiers."""
        return CLASS_ORDER.index(self)

    @classmethod
    def from_code(cls, code):
        return CLASS_ORDER[int(code)]


CLASS_ORDER = (ActivityClass.STATIONARY, ActivityClass.SIT_TO_STAND, ActivityClass.LIE_TO_STAND)


class RecordingFormatError(ValueError):
    """A recording file is missing, malformed or inconsistent."""


@dataclass
class Recording:
    """Timestamped raw PPG samples plus acquisition metadata."""

    times: np.ndarray
    values: np.ndarray
    sample_rate: float
    label: ActivityClass = ActivityClass.STATIONARY
    source_id: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values)
        self.label = ActivityClass.parse(self.label)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values.astype(np.float64))):
            raise ValueError("values must be finite")

    def __len__(self):
        return self.values.shape[0]

    @property
    def duration(self):
        if len(self) == 0:
            return 0.0
        return float(self.times[-1] - self.times[0]) + 1.0 / self.sample_rate

    @property
    def movement_onset(self):
        """Time of the postural change, or ``None`` for stationary recordings."""
        onset = self.metadata.get("movement_onset")
        return None if onset is None else float(onset)


def _sidecar(path):
    return Path(path).with_suffix(".json")


def write_recording(rec, path):
    """Write ``time_s,value`` CSV and a JSON metadata sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["time_s", "value"])
        for t, v in zip(rec.times, rec.values):
            w.writerow([f"{t:.6f}", int(v)])
    meta = dict(rec.metadata)
    meta.update(
        source_id=rec.source_id,
        sample_rate=rec.sample_rate,
        label=rec.label.value,
        n_samples=len(rec),
    )
    with open(_sidecar(path), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_recording(path):
    """Inverse of :func:`write_recording`. Raises RecordingFormatError."""
    path = Path(path)
    meta_path = _sidecar(path)
    try:
        with open(meta_path, encoding="utf-8") as f:
            meta = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise RecordingFormatError(f"{meta_path}: unreadable metadata ({exc})") from exc
    times, values = [], []
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["time_s", "value"]:
                raise RecordingFormatError(f"{path}: expected header time_s,value, got {header}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 2:
                    raise RecordingFormatError(f"{path}:{lineno}: expected 2 columns")
                times.append(float(row[0]))
                values.append(int(row[1]))
    except OSError as exc:
        raise RecordingFormatError(f"{path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, RecordingFormatError):
            raise
        raise RecordingFormatError(f"{path}: {exc}") from exc
    sample_rate = float(meta.pop("sample_rate", 0) or 0)
    label = meta.pop("label", ActivityClass.STATIONARY.value)
    source_id = meta.pop("source_id", path.stem)
    meta.pop("n_samples", None)
    try:
        return Recording(
            times=np.array(times),
            values=np.array(values, dtype=np.int64),
            sample_rate=sample_rate,
            label=label,
            source_id=source_id,
            metadata=meta,
        )
    except ValueError as exc:
        raise RecordingFormatError(f"{path}: {exc}") from exc
