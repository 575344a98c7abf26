"""Synthetic PPG recordings with known landmarks.

Each pulse is a chain of four cosine segments joining the knots
onset -> systolic peak -> dicrotic notch -> diastolic peak -> end, so every
landmark sits exactly at a knot. The two inner segments are raised-cosine
half waves. The upstroke is a quarter wave and the diastolic run-off a
truncated cosine, both flat at the peak and steep at the foot, so
consecutive pulses meet in a sharp minimum the way real PPG feet do. Movement
scenarios add an orthostatic transient (linear 2 s rise, exponential decay),
a heart-rate increase, a drop in pulsatile amplitude and a burst of
band-limited motion artifact.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .recording import ActivityClass, Recording, write_recording

RISE_SECONDS = 2.0
ARTIFACT_SECONDS = 2.0
# Arc of the diastolic run-off cosine: below pi so the pulse still ends on a
# steep slope, close to pi so the curvature at the diastolic peak roughly
# matches the curvature on its rising side.
RUNOFF_ARC = 0.9 * math.pi

# Systolic-peak standard deviations reported for the three classes (a.u.).
REFERENCE_PEAK_STD = {
    ActivityClass.STATIONARY: 160.6,
    ActivityClass.SIT_TO_STAND: 429.7,
    ActivityClass.LIE_TO_STAND: 1100.7,
}


@dataclass(frozen=True)
class PulseTemplate:
    """Shape of one cardiac cycle. Time fractions are relative to ``period``."""

    period: float = 0.8
    systolic_amp: float = 1000.0
    systolic_time_frac: float = 0.2
    diastolic_amp: float = 650.0
    diastolic_time_frac: float = 0.6
    notch_depth_frac: float = 0.2
    notch_time_frac: float | None = None

    def __post_init__(self):
        vals = [self.period, self.systolic_amp, self.systolic_time_frac, self.diastolic_amp,
                self.diastolic_time_frac, self.notch_depth_frac]
        if self.notch_time_frac is not None:
            vals.append(self.notch_time_frac)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("template fields must be finite")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if not 0 < self.systolic_time_frac < self.diastolic_time_frac < 1:
            raise ValueError("need 0 < systolic_time_frac < diastolic_time_frac < 1")
        if not self.systolic_amp > self.diastolic_amp > 0:
            raise ValueError("need systolic_amp > diastolic_amp > 0")
        if not 0 <= self.notch_depth_frac < 1:
            raise ValueError("notch_depth_frac must lie in [0, 1)")
        if self.notch_amp < 0:
            raise ValueError("notch would fall below the pulse onset; reduce notch_depth_frac")
        nt = self.notch_frac
        if not self.systolic_time_frac < nt < self.diastolic_time_frac:
            raise ValueError("notch must lie strictly between systolic and diastolic peaks")

    @property
    def notch_amp(self):
        return self.diastolic_amp - self.notch_depth_frac * self.systolic_amp

    @property
    def notch_frac(self):
        if self.notch_time_frac is None:
            return 0.5 * (self.systolic_time_frac + self.diastolic_time_frac)
        return self.notch_time_frac

    def knots(self):
        u = np.array([0.0, self.systolic_time_frac, self.notch_frac, self.diastolic_time_frac, 1.0])
        v = np.array([0.0, self.systolic_amp, self.notch_amp, self.diastolic_amp, 0.0])
        return u, v


def pulse_shape(phase, template):
    """Evaluate the template at pulse phases in [0, 1] (period-normalised time)."""
    u, v = template.knots()
    phase = np.clip(np.asarray(phase, dtype=np.float64), 0.0, 1.0)
    seg = np.clip(np.searchsorted(u, phase, side="right") - 1, 0, len(u) - 2)
    u0, u1 = u[seg], u[seg + 1]
    v0, v1 = v[seg], v[seg + 1]
    frac = (phase - u0) / (u1 - u0)
    ease = 0.5 * (1.0 - np.cos(np.pi * frac))
    ease = np.where(seg == 0, np.sin(0.5 * np.pi * frac), ease)
    ease = np.where(seg == len(u) - 2, (1.0 - np.cos(RUNOFF_ARC * frac)) / (1.0 - math.cos(RUNOFF_ARC)), ease)
    return v0 + (v1 - v0) * ease


def render_pulse(template, sample_rate):
    """Sample one pulse including both endpoints (``round(period*fs) + 1`` samples)."""
    if not (math.isfinite(sample_rate) and sample_rate > 0):
        raise ValueError("sample_rate must be positive and finite")
    n = int(round(template.period * sample_rate))
    if n < 20:
        raise ValueError(f"pulse would span {n} samples; at least 20 are required")
    return pulse_shape(np.arange(n + 1) / n, template)


@dataclass(frozen=True)
class ScenarioSpec:
    class_label: ActivityClass = ActivityClass.STATIONARY
    duration: float = 60.0
    movement_onset: float = 30.0
    recovery_time: float = 10.0
    transient_gain: float = 0.0
    artifact_amp: float = 0.0
    wander_amp: float = 0.0
    wander_freq: float = 0.2
    noise_sigma: float = 0.0
    dc_level: float = 50000.0
    sample_rate: float = 100.0
    seed: int = 0
    template: PulseTemplate = field(default_factory=PulseTemplate)
    # fractional std of beat-to-beat period and amplitude
    period_jitter: float = 0.0
    amplitude_jitter: float = 0.0
    # fractional heart-rate rise and pulse-amplitude drop at the transient peak
    hr_increase: float = 0.0
    amplitude_drop: float = 0.0
    random_start: bool = False

    def __post_init__(self):
        object.__setattr__(self, "class_label", ActivityClass.parse(self.class_label))
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        amps = (self.transient_gain, self.artifact_amp, self.wander_amp, self.noise_sigma,
                self.period_jitter, self.amplitude_jitter, self.hr_increase)
        if any(a < 0 for a in amps):
            raise ValueError("amplitudes must be non-negative")
        if not 0 <= self.amplitude_drop < 1:
            raise ValueError("amplitude_drop must lie in [0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.class_label.is_movement:
            if self.movement_onset < 0 or self.recovery_time <= 0:
                raise ValueError("movement_onset must be >= 0 and recovery_time > 0")
            if self.movement_onset + self.recovery_time > self.duration:
                raise ValueError("movement_onset + recovery_time exceeds duration")


@dataclass
class GroundTruth:
    onset_times: list
    systolic_times: list
    notch_times: list
    diastolic_times: list
    class_label: ActivityClass
    movement_onset: float | None = None
    periods: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["class_label"] = self.class_label.value
        if self.movement_onset is None:
            del d["movement_onset"]
        return d

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as f:
            d = json.load(f)
        d["class_label"] = ActivityClass.parse(d["class_label"])
        return cls(**d)


def transient_envelope(t, movement_onset, recovery_time):
    """Unit-peak orthostatic transient: linear 2 s rise then exp decay (tau = recovery/3)."""
    t = np.asarray(t, dtype=np.float64)
    dt = t - movement_onset
    tau = recovery_time / 3.0
    rise = np.clip(dt / RISE_SECONDS, 0.0, 1.0)
    decay = np.exp(-np.clip(dt - RISE_SECONDS, 0.0, None) / tau)
    return np.where(dt < 0, 0.0, rise * decay)


def _artifact_burst(rng, n, sample_rate, amp):
    noise = rng.standard_normal(n + 64)
    hi = min(5.0, 0.45 * sample_rate)
    sos = signal.butter(2, [0.5, hi], btype="bandpass", fs=sample_rate, output="sos")
    burst = signal.sosfilt(sos, noise)[64:]
    burst *= np.hanning(n) if n > 2 else 1.0
    rms = np.sqrt(np.mean(burst**2)) if n else 0.0
    return burst * (amp / rms) if rms > 0 else burst


def generate_recording(spec):
    """Render a scenario. Returns ``(Recording, GroundTruth)``; deterministic per seed."""
    tpl = spec.template
    if spec.duration < tpl.period:
        raise ValueError("duration shorter than one pulse period")
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate
    moving = spec.class_label.is_movement

    def env(t):
        return transient_envelope(t, spec.movement_onset, spec.recovery_time) if moving else np.zeros_like(t)

    starts, periods, scales = [], [], []
    t = -rng.uniform(0.0, 1.0) * tpl.period if spec.random_start else 0.0
    while t < spec.duration:
        e = float(env(np.array(t)))
        p = tpl.period * (1.0 + spec.period_jitter * rng.standard_normal())
        p = float(np.clip(p / (1.0 + spec.hr_increase * e), 0.4, 2.0))
        s = (1.0 + spec.amplitude_jitter * rng.standard_normal()) * (1.0 - spec.amplitude_drop * e)
        starts.append(t)
        periods.append(p)
        scales.append(max(s, 0.05))
        t += p
    starts = np.array(starts)
    periods = np.array(periods)
    scales = np.array(scales)

    n = int(round(spec.duration * fs))
    times = np.arange(n) / fs
    k = np.searchsorted(starts, times, side="right") - 1
    phase = (times - starts[k]) / periods[k]
    x = scales[k] * pulse_shape(phase, tpl)

    wander_phase = rng.uniform(0.0, 2.0 * np.pi)
    x += spec.dc_level
    x += spec.wander_amp * np.sin(2.0 * np.pi * spec.wander_freq * times + wander_phase)
    if spec.noise_sigma > 0:
        x += rng.normal(0.0, spec.noise_sigma, n)
    if moving:
        x += spec.transient_gain * env(times)
        if spec.artifact_amp > 0:
            lo = int(round(spec.movement_onset * fs))
            hi = min(n, int(round((spec.movement_onset + ARTIFACT_SECONDS) * fs)))
            if hi > lo:
                x[lo:hi] += _artifact_burst(rng, hi - lo, fs, spec.artifact_amp)
    values = np.clip(np.rint(x), 0, 2**31 - 1).astype(np.int64)

    keep = starts >= 0
    st, pe = starts[keep], periods[keep]
    truth = GroundTruth(
        onset_times=st.tolist(),
        systolic_times=(st + tpl.systolic_time_frac * pe).tolist(),
        notch_times=(st + tpl.notch_frac * pe).tolist(),
        diastolic_times=(st + tpl.diastolic_time_frac * pe).tolist(),
        class_label=spec.class_label,
        movement_onset=spec.movement_onset if moving else None,
        periods=pe.tolist(),
    )
    meta = {"generator": "synth", "seed": spec.seed, "duration": spec.duration}
    if moving:
        meta["movement_onset"] = spec.movement_onset
    rec = Recording(
        times=times,
        values=values,
        sample_rate=fs,
        label=spec.class_label,
        source_id=f"synth-{spec.class_label.value}-{spec.seed}",
        metadata=meta,
    )
    return rec, truth


def _envelope_std(duration, movement_onset, recovery_time, sample_rate):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return float(np.std(transient_envelope(t, movement_onset, recovery_time)))


def calibrated_transient_gain(label, duration=60.0, movement_onset=30.0, recovery_time=10.0,
                              sample_rate=100.0):
    """Transient gain whose added variance lifts the stationary peak std to the class std."""
    label = ActivityClass.parse(label)
    if not label.is_movement:
        return 0.0
    base = REFERENCE_PEAK_STD[ActivityClass.STATIONARY]
    extra = math.sqrt(REFERENCE_PEAK_STD[label] ** 2 - base**2)
    env = _envelope_std(duration, movement_onset, recovery_time, sample_rate)
    if env <= 0:
        raise ValueError(f"movement onset {movement_onset:g} s leaves no transient inside {duration:g} s")
    return extra / env


# Calibration knobs for movement scenarios; not measured quantities.
_MOVEMENT_KNOBS = {
    ActivityClass.STATIONARY: dict(artifact_amp=0.0, hr_increase=0.0, amplitude_drop=0.0),
    ActivityClass.SIT_TO_STAND: dict(artifact_amp=150.0, hr_increase=0.15, amplitude_drop=0.15),
    ActivityClass.LIE_TO_STAND: dict(artifact_amp=400.0, hr_increase=0.3, amplitude_drop=0.3),
}


# Lying-to-standing is the slower, larger manoeuvre, so its transient lasts longer.
DEFAULT_RECOVERY_S = {
    ActivityClass.STATIONARY: 10.0,
    ActivityClass.SIT_TO_STAND: 10.0,
    ActivityClass.LIE_TO_STAND: 15.0,
}


def preset_scenario(label, seed, duration=60.0, movement_onset=30.0, recovery_time=None,
                   sample_rate=100.0, noise_frac=0.02):
    """Scenario following the recording protocol (30 s still, stand, 30 s standing)
    with class scales calibrated to the reported systolic-peak spreads.

    ``recovery_time`` defaults to a per-class value from ``DEFAULT_RECOVERY_S``.
    """
    label = ActivityClass.parse(label)
    if recovery_time is None:
        recovery_time = DEFAULT_RECOVERY_S[label]
    rng = np.random.default_rng([seed, 7919])
    tpl = PulseTemplate(period=float(rng.uniform(0.7, 0.95)))
    stationary_std = REFERENCE_PEAK_STD[ActivityClass.STATIONARY]
    return ScenarioSpec(
        class_label=label,
        duration=duration,
        movement_onset=movement_onset,
        recovery_time=recovery_time,
        transient_gain=calibrated_transient_gain(label, duration, movement_onset, recovery_time, sample_rate),
        wander_amp=stationary_std * math.sqrt(2.0),
        wander_freq=float(rng.uniform(0.15, 0.3)),
        noise_sigma=noise_frac * tpl.systolic_amp,
        dc_level=float(rng.uniform(40000.0, 60000.0)),
        sample_rate=sample_rate,
        seed=seed,
        template=tpl,
        period_jitter=0.02,
        amplitude_jitter=0.03,
        random_start=True,
        **_MOVEMENT_KNOBS[label],
    )


def batch_labels(n_recordings=38, n_sit=24):
    """Class census for a batch: ``n_sit`` sit-to-stand, the rest lie-to-stand."""
    if not 0 <= n_sit <= n_recordings:
        raise ValueError("n_sit must lie in [0, n_recordings]")
    return [ActivityClass.SIT_TO_STAND] * n_sit + [ActivityClass.LIE_TO_STAND] * (n_recordings - n_sit)


def write_simulation(rec, truth, out_dir, stem=None):
    """Write recording CSV + metadata JSON + ``.truth.json``; returns the CSV path."""
    out_dir = Path(out_dir)
    stem = stem or rec.source_id
    csv_path = write_recording(rec, out_dir / f"{stem}.csv")
    truth.write(out_dir / f"{stem}.truth.json")
    return csv_path
