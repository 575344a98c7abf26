"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import csv
import dataclasses
import time

import numpy as np
import pytest

from ppgposture import cli, features, pipeline, poi, preprocess, synth, wire
from ppgposture.classify import PRESETS, KNN, ANN, cross_validate, evaluate, make_model, split_stratified
from ppgposture.classify.benchmark import run_preset
from ppgposture.classify.metrics import class_metrics
from ppgposture.features import FEATURE_NAMES
from ppgposture.recording import ActivityClass

from conftest import blobs, record_criterion

FS = 100.0


# 1 ---------------------------------------------------------------------------


def test_c01_wire_roundtrip_fragmented():
    rng = np.random.default_rng(1)
    kinds = rng.integers(0, 2, 10_000)
    values = rng.integers(0, 2**31, 10_000)
    records = [wire.Time(int(v)) if k else wire.Sensor(int(v)) for k, v in zip(kinds, values)]
    t0 = time.perf_counter()
    addr, th = wire.serve_bytes_once(wire.encode_many(records))
    proxy = wire.FragmentingProxy(addr, chunk=1).start()
    res = wire.receive_records(proxy.address, timeout=10.0)
    elapsed = time.perf_counter() - t0
    th.join(5)
    ok = res.records == records and res.malformed == 0 and not res.truncated and elapsed < 10.0
    assert record_criterion(1, "wire round-trip through 1-byte proxy", ok,
                            f"{len(res.records)} records, {elapsed:.2f} s")


# 2 ---------------------------------------------------------------------------


def test_c02_protocol_framing():
    got = [wire.encode(wire.Sensor(1234)), wire.encode(wire.Time(0)), wire.encode(wire.Time(5000))]
    ok = got == [b"1234,", b"2147483648,", b"2147488648,"]
    assert record_criterion(2, "protocol framing examples", ok, str(got))


# 3 ---------------------------------------------------------------------------


def _sine_gain_db(f, n=6000):
    x = np.sin(2 * np.pi * f * np.arange(n))
    y = preprocess.bandpass(x)
    core = slice(n // 4, 3 * n // 4)
    return 20 * np.log10(np.std(y[core]) / np.std(x[core])), x, y


def test_c03_filter_contract():
    f_mid = np.sqrt(preprocess.DEFAULT_F_LO * preprocess.DEFAULT_F_HI)
    g_mid, x, y = _sine_gain_db(f_mid)
    g_stop, _, _ = _sine_gain_db(0.4)
    core = slice(1500, 4500)
    lags = np.arange(-30, 31)
    lag = lags[int(np.argmax([np.dot(x[core], np.roll(y, -k)[core]) for k in lags]))]
    ok = abs(g_mid) <= 1.0 and g_stop <= -20.0 and abs(lag) <= 1
    assert record_criterion(3, "band-pass contract", ok,
                            f"in-band {g_mid:+.3f} dB, 0.4 c/s {g_stop:.1f} dB, lag {lag}")


# 4 ---------------------------------------------------------------------------


def test_c04_segmentation_recall():
    labels = ("Stationary", "SitToStand", "LieToStand")
    hits = total = notch_hits = 0
    for i in range(20):
        # white noise at 2% of the systolic amplitude; movement bursts off
        spec = dataclasses.replace(synth.preset_scenario(labels[i % 3], 100 + i, noise_frac=0.02), artifact_amp=0.0)
        rec, truth = synth.generate_recording(spec)
        on = pipeline.process_recording(rec).onset_times
        for t in truth.onset_times:
            total += 1
            hits += np.min(np.abs(on - t)) <= 0.03
        notches = np.array(truth.notch_times)
        notch_hits += int(np.sum(np.min(np.abs(on[:, None] - notches[None, :]), axis=1) <= 0.03))
    recall = hits / total
    ok = recall >= 0.95 and notch_hits == 0
    assert record_criterion(4, "segmentation recall", ok,
                            f"recall {100 * recall:.2f}% of {total}, {notch_hits} onsets on notches")


# 5 ---------------------------------------------------------------------------


def test_c05_diastolic_detection():
    rng = np.random.default_rng(5)
    err = []
    for _ in range(100):
        tpl = synth.PulseTemplate(period=rng.uniform(0.7, 0.95))
        n = round(tpl.period * FS) + 1
        x = synth.render_pulse(tpl, FS) + rng.normal(0, 0.02 * tpl.systolic_amp, n)
        res = poi.find_diastolic(x, FS)
        truth = tpl.diastolic_time_frac * tpl.period
        err.append(np.inf if res.index is None else abs(res.index / FS - truth))
    mae = float(np.mean(err))
    # flat-topped secondary lobe: no curvature minimum near the zero crossing
    t = np.arange(0, 0.9, 1 / FS)
    constructed = 1000 * np.exp(-(((t - 0.2) / 0.06) ** 2)) + 500 * np.exp(-(((t - 0.55) / 0.12) ** 8))
    fb = poi.find_diastolic(constructed, FS)
    ok = mae <= 0.020 and fb.fallback_used and fb.index is not None
    assert record_criterion(5, "diastolic detection", ok,
                            f"MAE {1000 * mae:.1f} ms over 100 pulses, fallback exercised={fb.fallback_used}")


# 6 ---------------------------------------------------------------------------


def _oracle_features(p, fidx_dia, fidx_dic, base_raw, base_det):
    """Features recomputed from sample indices and the pulse arrays."""
    n = len(p)
    t = lambda i: p.start_time + i / p.sample_rate  # noqa: E731
    raw, det, fil = p.raw, p.detrended, p.filtered
    sr, sd, sf = int(np.argmax(raw)), int(np.argmax(det)), int(np.argmax(fil))
    split = fidx_dic if fidx_dic is not None else (fidx_dia if fidx_dia is not None else sf)
    has_dia = fidx_dia is not None
    return {
        "systolic_magnitude": fil[sf],
        "systolic_rise_gradient": (fil[sf] - fil[0]) / (sf / p.sample_rate),
        "raw_systolic_amplitude": raw[sr] - raw[0],
        "systolic_amplitude": fil[sf] - fil[0],
        "peak_difference": fil[sf] - fil[fidx_dia] if has_dia else 0.0,
        "detrended_systolic_amplitude": det[sd] - det[0],
        "pulse_onset_magnitude": fil[0],
        "raw_offset": raw[-1] - raw[0],
        "raw_orthostatic_magnitude": raw[sr] - base_raw,
        "pulse_width": t(n - 1) - t(0),
        "end_point_magnitude": fil[-1],
        "detrended_offset": det[-1] - det[0],
        "diastolic_amplitude": fil[fidx_dia] - fil[0] if has_dia else 0.0,
        "raw_diastolic_amplitude": raw[fidx_dia] - raw[0] if has_dia else 0.0,
        "systolic_phase": t(split) - t(0),
        "diastolic_phase": t(n - 1) - t(split),
        "offset": fil[-1] - fil[0],
        "detrended_orthostatic_magnitude": det[sd] - base_det,
        "detrended_diastolic_amplitude": det[fidx_dia] - det[0] if has_dia else 0.0,
        "diastolic_magnitude": fil[fidx_dia] if has_dia else 0.0,
        "dicrotic_magnitude": fil[fidx_dic] if fidx_dic is not None else 0.0,
    }


TIME_FEATURES = {"pulse_width", "systolic_phase", "diastolic_phase"}


def test_c06_feature_arithmetic():
    rec, _ = synth.generate_recording(synth.preset_scenario("SitToStand", 6))
    proc = pipeline.process_recording(rec)
    table = pipeline.recording_features(rec)
    t0 = rec.times[0]
    starts = np.array([p.start_time - t0 for p in proc.pulses])
    stat = starts < features.STATIONARY_WINDOW_S
    base_raw = np.mean([p.raw[np.argmax(p.raw)] for p, s in zip(proc.pulses, stat) if s])
    base_det = np.mean([p.detrended[np.argmax(p.detrended)] for p, s in zip(proc.pulses, stat) if s])
    worst_t = worst_m = worst_add = 0.0
    mismatches = []
    for k in range(50):
        p, q = proc.pulses[k], proc.pois[k]["filtered"]
        dia = None if q.diastolic is None else q.diastolic.index
        dic = None if q.dicrotic is None else q.dicrotic.index
        want = _oracle_features(p, dia, dic, base_raw, base_det)
        got = dict(zip(FEATURE_NAMES, table.X[k]))
        for name in FEATURE_NAMES:
            diff = abs(got[name] - want[name])
            if name in TIME_FEATURES:
                worst_t = max(worst_t, diff)
                bad = diff > 1.0 / FS
            elif name == "systolic_rise_gradient":
                bad = diff > 1e-9 * abs(want[name])
            else:
                worst_m = max(worst_m, diff)
                bad = diff > 1e-9
            if bad:
                mismatches.append((k, name, got[name], want[name]))
        worst_add = max(worst_add, abs(got["systolic_phase"] + got["diastolic_phase"] - got["pulse_width"]))
    ok = not mismatches and worst_add <= 1e-9
    assert record_criterion(6, "feature arithmetic on 50 pulses", ok,
                            f"max time diff {worst_t:.2e} s, max magnitude diff {worst_m:.2e}, "
                            f"phase additivity {worst_add:.1e}, {len(mismatches)} mismatches")


# 7 ---------------------------------------------------------------------------


def _pearson_chi2(obs):
    obs = np.asarray(obs, dtype=float)
    e = obs.sum(axis=1, keepdims=True) * obs.sum(axis=0, keepdims=True) / obs.sum()
    return float(np.sum((obs - e) ** 2 / e))


def test_c07_chi_squared_oracle():
    tables = [
        [[10, 0], [0, 10]],
        [[15, 10], [10, 15]],
        [[3, 7, 11], [9, 2, 5]],
        [[20, 1, 4], [6, 12, 2], [1, 3, 30]],
    ]
    hand_err = max(abs(features.chi_squared_statistic(t) - _pearson_chi2(t)) for t in tables)
    rng = np.random.default_rng(7)
    n = 500
    y = rng.integers(0, 3, n)
    X = rng.standard_normal((n, 10)) * rng.uniform(0.5, 3, 10) + np.outer(y, rng.uniform(0, 1, 10))
    names = tuple(f"f{j}" for j in range(10))
    base = features.chi_squared_scores(X, y, names)
    transforms = [np.arctan, lambda v: v**3, lambda v: np.exp(v / 4), lambda v: -v, lambda v: -np.exp(v / 4)]
    inv_err = 0.0
    for f in transforms:
        r = features.chi_squared_scores(f(X), y, names)
        inv_err = max(inv_err, max(abs(r.score(m) - base.score(m)) for m in names))
    ok = hand_err <= 1e-9 and inv_err <= 1e-9
    assert record_criterion(7, "chi-squared oracle and monotone invariance", ok,
                            f"hand-table error {hand_err:.1e}, transform error {inv_err:.1e} on 10 features")


# 8 ---------------------------------------------------------------------------


@pytest.mark.slow
def test_c08_classifier_sanity():
    X, y = blobs(n=500)
    tr, te = split_stratified(y, seed=0)
    accs = {}
    for name in PRESETS:
        rep, _, _ = run_preset(name, X, y, tr, te, k=3)
        accs[name] = rep.test_accuracy
    self_acc = KNN(k=1).fit(X[tr], y[tr]).score(X[tr], y[tr])
    # labels shuffled: chance accuracy, averaged over five shuffles to tame split noise
    rng = np.random.default_rng(8)
    perm = {}
    perms = [rng.permutation(y) for _ in range(5)]
    for name in PRESETS:
        perm[name] = 100 * np.mean([cross_validate(X, yp, lambda n=name: make_model(n), k=10) for yp in perms])
    worst = min(accs, key=accs.get)
    off = max(perm, key=lambda m: abs(perm[m] - 100 / 3))
    ok = min(accs.values()) >= 95.0 and self_acc == 1.0 and all(abs(v - 100 / 3) <= 5.0 for v in perm.values())
    assert record_criterion(8, "classifier sanity", ok,
                            f"lowest test accuracy {worst} {accs[worst]:.1f}%, fine-KNN self {100 * self_acc:.0f}%, "
                            f"permuted accuracy furthest from 33.3: {off} {perm[off]:.1f}%")


# 9 ---------------------------------------------------------------------------


def test_c09_ann_gradient_check():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((40, 20))
    yi = rng.integers(0, 3, 40)
    m = ANN(hidden=25)
    m.init_params(20, 3, np.random.default_rng(0))
    theta = m.get_flat()
    _, g = m.flat_grad(X, yi)
    worst = 0.0
    h = 1e-6
    for j in rng.choice(theta.size, 10, replace=False):
        e = np.zeros_like(theta)
        e[j] = h
        m.set_flat(theta + e)
        lp = m.loss(X, yi)
        m.set_flat(theta - e)
        lm = m.loss(X, yi)
        num = (lp - lm) / (2 * h)
        worst = max(worst, abs(num - g[j]) / max(abs(num), abs(g[j]), 1e-12))
    m.set_flat(theta)
    ok = worst < 1e-4 and theta.dtype == np.float64
    assert record_criterion(9, "ANN gradient check", ok, f"max relative error {worst:.2e}")


# 10 --------------------------------------------------------------------------


def test_c10_metrics_hand_case():
    p, s, f, _ = class_metrics(8, 2, 4)

    class Fixed:
        name = "fixed"
        classes_ = np.array([0, 1])

        def predict(self, X):
            # 8 TP, 2 FP, 4 FN for class 1, plus 6 TN
            return np.array([1] * 8 + [1] * 2 + [0] * 4 + [0] * 6)

    y_true = np.array([1] * 8 + [0] * 2 + [1] * 4 + [0] * 6)
    _, rep = evaluate(Fixed(), np.zeros((20, 1)), y_true, classes=(0, 1))
    ok = (abs(p - 80.0) <= 0.01 and abs(s - 66.67) <= 0.01 and abs(f - 72.73) <= 0.01
          and abs(rep.precision[1] - 80.0) <= 0.01 and abs(rep.sensitivity[1] - 66.67) <= 0.01
          and abs(rep.f1[1] - 72.73) <= 0.01)
    assert record_criterion(10, "metrics hand case", ok,
                            f"precision {rep.precision[1]:.2f}, sensitivity {rep.sensitivity[1]:.2f}, "
                            f"F1 {rep.f1[1]:.2f}")


# 11 / 12 ---------------------------------------------------------------------


def _cli_pipeline(workdir, seed=0):
    run = lambda *a: cli.main([str(x) for x in a])  # noqa: E731
    rc = [
        run("--seed", seed, "simulate", "--batch", 38, "--n-sit", 24, "--out", workdir / "recs"),
        run("process", *sorted((workdir / "recs").glob("rec*.csv")), "--out", workdir / "pulses.csv"),
        run("features", workdir / "pulses.csv", "--out", workdir / "features.csv"),
        run("--seed", seed, "train", workdir / "features.csv", "--out", workdir / "reports.json"),
        run("report", workdir / "reports.json", "--out", workdir / "report"),
    ]
    assert rc == [0] * 5
    return workdir / "report"


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    t0 = time.perf_counter()
    out = _cli_pipeline(tmp_path_factory.mktemp("e2e_a"))
    return out, time.perf_counter() - t0


def _summary(report_dir):
    with open(report_dir / "summary.csv", newline="") as f:
        return {r["model"]: r for r in csv.DictReader(f)}


@pytest.mark.slow
def test_c11_end_to_end_benchmark(pipeline_run):
    report_dir, elapsed = pipeline_run
    rows = _summary(report_dir)
    recs = sorted(report_dir.parent.glob("recs/rec*.csv"))
    labels = [p.stem.split("_", 1)[1] for p in recs]
    table = features.read_feature_csv(report_dir.parent / "features.csv")
    stationary = 100 * np.mean(table.y == ActivityClass.STATIONARY.code)
    ann, lda = rows["Wide ANN"], rows["LDA"]
    f = {c: float(ann[f"f1_{c}"]) for c in ("Stationary", "SitToStand", "LieToStand")}
    ordered = f["Stationary"] > f["LieToStand"] > f["SitToStand"]
    beats = float(ann["mean_f1"]) > float(lda["mean_f1"])
    census = labels.count("SitToStand") == 24 and labels.count("LieToStand") == 14
    # dataset shape: about 79% of pulses stationary
    shaped = census and abs(stationary - 79.0) <= 5.0
    ok = ordered and beats and shaped and elapsed < 300
    assert record_criterion(
        11, "end-to-end synthetic benchmark", ok,
        f"wide-ANN F1 S/L/Sit {f['Stationary']:.2f}/{f['LieToStand']:.2f}/{f['SitToStand']:.2f}, "
        f"mean F1 ANN {float(ann['mean_f1']):.2f} vs LDA {float(lda['mean_f1']):.2f}, "
        f"{stationary:.1f}% stationary pulses, {elapsed:.0f} s")


@pytest.mark.slow
def test_c12_determinism(pipeline_run, tmp_path):
    first, _ = pipeline_run
    second = _cli_pipeline(tmp_path)
    same = all((first / n).read_bytes() == (second / n).read_bytes() for n in ("summary.csv", "f1_bars.csv"))
    assert record_criterion(12, "byte-identical reports across two runs", same)
