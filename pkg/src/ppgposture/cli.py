"""Command-line entry point: ``ppgposture <stage> ...``.

Stages hand off through CSV/JSON files::

    simulate -> recordings (CSV + JSON sidecar + ground truth)
    device / receive -> recordings over TCP
    process -> pulses.csv (landmarks of every pulse and view)
    features -> features.csv
    rank -> ranking.csv
    train -> reports.json
    report -> summary.csv + f1_bars.csv

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, features, pipeline, synth, wire
from .classify import benchmark
from .classify.metrics import ConfusionMatrix, ModelReport, report_from_confusion
from .classify.validation import ValidationError
from .preprocess import PreprocessError
from .recording import CLASS_ORDER, ActivityClass, RecordingFormatError, read_recording
from .segment import SegmentationError

log = logging.getLogger("ppgposture")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DATA_ERRORS = (RecordingFormatError, PreprocessError, SegmentationError, features.FeatureError,
               ValidationError, wire.WireError, OSError, json.JSONDecodeError)

# keys accepted in the --config file, with their parsers
CONFIG_KEYS = {
    "f_lo": float,
    "f_hi": float,
    "stationary_window": float,
    "label_window": float,
    "drop": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
    "models": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
    "cv_folds": int,
    "noise_frac": float,
    "lda_shrinkage": float,
    "nb_var_floor": float,
    "tree_max_depth": int,
    "tree_min_leaf": int,
    "svm_c": float,
    "svm_tol": float,
    "svm_max_passes": int,
    "ann_lr": float,
    "ann_momentum": float,
    "ann_batch_size": int,
    "ann_max_epochs": int,
    "ann_patience": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path):
    """Parse a ``key = value`` file (``#`` comments allowed) into typed settings."""
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[ppgposture]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from exc
    out = {}
    for key, value in cp["ppgposture"].items():
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}: unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}: bad value for {key}: {value!r}") from exc
    return out


def _pipeline_config(cfg):
    base = pipeline.PipelineConfig()
    return pipeline.PipelineConfig(
        f_lo=cfg.get("f_lo", base.f_lo),
        f_hi=cfg.get("f_hi", base.f_hi),
        stationary_window=cfg.get("stationary_window", base.stationary_window),
        label_window=cfg.get("label_window", base.label_window),
    )


def _address(text):
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def _activity(text):
    try:
        return ActivityClass.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------- subcommands


def cmd_simulate(args, cfg):
    out = Path(args.out)
    noise = args.noise_frac if args.noise_frac is not None else cfg.get("noise_frac", 0.02)
    if args.batch is not None:
        if args.batch < 1:
            raise UsageError("--batch must be at least 1")
        if not 0 <= args.n_sit <= args.batch:
            raise UsageError("--n-sit must lie in [0, --batch]")
        jobs = [(lab, args.seed * 1000 + i, f"rec{i:03d}_{lab.value}")
                for i, lab in enumerate(synth.batch_labels(args.batch, args.n_sit))]
    else:
        lab = args.klass
        jobs = [(lab, args.seed, args.stem or f"{lab.value}_seed{args.seed}")]
    out.mkdir(parents=True, exist_ok=True)
    for lab, seed, stem in jobs:
        try:
            spec = synth.preset_scenario(lab, seed, duration=args.duration, movement_onset=args.movement_onset,
                                        noise_frac=noise, sample_rate=args.rate)
            rec, truth = synth.generate_recording(spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        path = synth.write_simulation(rec, truth, out, stem)
        print(path)
    return EXIT_OK


def _source_values(args):
    if args.replay:
        rec = read_recording(args.replay)
        return rec.values, rec.sample_rate, f"replay:{Path(args.replay).name}"
    spec = synth.preset_scenario(args.scenario, args.seed, duration=max(args.limit_seconds, 1.0),
                                movement_onset=min(30.0, args.limit_seconds / 2), sample_rate=args.rate)
    rec, _ = synth.generate_recording(spec)
    return rec.values, args.rate, f"synthetic:{args.scenario.value}"


def cmd_device(args, cfg):
    values, rate, name = _source_values(args)
    host, port = args.listen
    speed = math.inf if args.speed <= 0 else args.speed
    config = wire.SessionConfig(host, port, args.limit_seconds, rate, values, speed, name)
    dev = wire.Device(config)
    print("listening on %s:%d" % dev.address, flush=True)
    try:
        sessions = dev.serve(args.sessions)
    except KeyboardInterrupt:
        dev.stop()
        sessions = dev.sessions
    for s in sessions:
        print(f"session: {s.sensor_records} samples, {s.reason}")
    return EXIT_OK


def cmd_receive(args, cfg):
    rec = wire.run_receiver(args.connect, args.out, sample_rate=args.rate, limit_seconds=args.limit_seconds,
                            label=args.klass, movement_onset=args.movement_onset, timeout=args.timeout)
    meta = rec.metadata
    print(f"{args.out}: {len(rec)} samples, malformed={meta['malformed']}, truncated={meta['truncated']}")
    return EXIT_OK


def cmd_process(args, cfg):
    pc = _pipeline_config(cfg)
    rows, skipped, seen = [], [], set()
    for path in args.recordings:
        try:
            rec = read_recording(path)
            if not rec.source_id or rec.source_id in seen:
                rec.source_id = f"{rec.source_id or 'rec'}:{Path(path).stem}"
            seen.add(rec.source_id)
            rec_rows = pipeline.pulse_rows(pipeline.process_recording(rec, pc))
            # fails early if the stationary window cannot anchor the orthostatic baseline
            pipeline.table_from_pulse_rows(rec_rows, pc)
            rows.extend(rec_rows)
        except (RecordingFormatError, PreprocessError, SegmentationError, features.FeatureError,
                ValueError, OSError) as exc:
            skipped.append(path)
            print(f"skipped {path}: {exc}", file=sys.stderr)
    if not rows:
        print("no usable recordings", file=sys.stderr)
        return EXIT_DATA
    pipeline.write_pulse_csv(rows, args.out)
    print(f"{args.out}: {len(rows)} pulses from {len(args.recordings) - len(skipped)} recordings"
          f" ({len(skipped)} skipped)")
    return EXIT_OK


def cmd_features(args, cfg):
    rows = pipeline.read_pulse_csv(args.pulses)
    table = pipeline.table_from_pulse_rows(rows, _pipeline_config(cfg))
    features.write_feature_csv(table, args.out)
    share = np.mean(table.y == ActivityClass.STATIONARY.code) if len(table) else 0.0
    print(f"{args.out}: {len(table)} rows, {100 * share:.1f}% stationary")
    return EXIT_OK


def _require_names(table, path):
    missing = [n for n in features.FEATURE_NAMES if n not in table.names]
    if missing:
        raise features.FeatureError(f"{path}: missing column(s) {', '.join(missing)}")


def cmd_rank(args, cfg):
    table = features.read_feature_csv(args.features)
    _require_names(table, args.features)
    ranking = features.chi_squared_scores(table.X, table.labels, table.names)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["rank", "feature", "chi2"])
        for i, (name, score) in enumerate(ranking, 1):
            w.writerow([i, name, f"{score:.6f}"])
    for i, (name, score) in enumerate(ranking, 1):
        print(f"{i:2d}  {name:32s} {score:12.3f}")
    return EXIT_OK


def _report_to_json(r, class_names):
    d = {"model": r.model, "failed": r.failed}
    if r.failed:
        return d
    d.update(
        validation_accuracy=r.validation_accuracy,
        test_accuracy=r.test_accuracy,
        confusion=r.confusion.counts.tolist(),
        classes=class_names,
    )
    return d


def _report_from_json(d):
    if d.get("failed"):
        return ModelReport(d["model"], float("nan"), float("nan"), {}, {}, {}, failed=d["failed"])
    cm = ConfusionMatrix(np.array(d["confusion"], dtype=np.int64), tuple(range(len(d["classes"]))))
    return report_from_confusion(d["model"], cm, d["validation_accuracy"])


def cmd_train(args, cfg):
    table = features.read_feature_csv(args.features)
    _require_names(table, args.features)
    drop = tuple(args.drop) if args.drop is not None else cfg.get("drop", features.DEFAULT_DROP)
    mask = features.select_features(None, drop, table.names)
    models = tuple(args.models) if args.models else cfg.get("models", benchmark.PRESETS)
    for m in models:
        if m not in benchmark.PRESETS:
            raise UsageError(f"unknown model preset {m!r}; choose from {', '.join(benchmark.PRESETS)}")
    used = [n for n, keep in zip(table.names, mask) if keep]
    log.info("training on %d rows x %d features", len(table), len(used))
    reports = benchmark.benchmark_grid(table.X[:, mask], table.y, models, seed=args.seed,
                                       k=cfg.get("cv_folds", 10), hyperparams=cfg)
    class_names = [c.value for c in CLASS_ORDER]
    doc = {
        "seed": args.seed,
        "features": used,
        "n_rows": len(table),
        "reports": [_report_to_json(r, class_names) for r in reports],
    }
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    for row in benchmark.summary_rows(reports):
        print(",".join(row))
    return EXIT_OK


def cmd_report(args, cfg):
    with open(args.reports, encoding="utf-8") as f:
        doc = json.load(f)
    if "reports" not in doc:
        raise features.FeatureError(f"{args.reports}: missing 'reports'")
    reports = [_report_from_json(d) for d in doc["reports"]]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    benchmark.write_summary_csv(reports, out / "summary.csv")
    chosen = [r for r in reports if r.model == args.model and not r.failed]
    if not chosen:
        raise features.FeatureError(f"{args.reports}: no successful report for model {args.model!r}")
    benchmark.write_f1_bars_csv(chosen[0], out / "f1_bars.csv")
    print(out / "summary.csv")
    print(out / "f1_bars.csv")
    return EXIT_OK


# --------------------------------------------------------------------- parser


def build_parser():
    p = _Parser(prog="ppgposture", description="PPG postural-movement recognition pipeline.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=0, help="global RNG seed (default 0)")
    p.add_argument("--config", help="key=value settings file")
    p.add_argument("-v", "--verbose", action="count", default=0)
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="write synthetic recordings with ground truth")
    s.add_argument("--class", dest="klass", type=_activity, default=ActivityClass.STATIONARY,
                   help="stationary | sit-to-stand | lie-to-stand")
    s.add_argument("--duration", type=float, default=60.0)
    s.add_argument("--movement-onset", type=float, default=30.0)
    s.add_argument("--rate", type=float, default=100.0, help="sample rate in Hz")
    s.add_argument("--noise-frac", type=float, default=None, help="white noise sigma / systolic amplitude")
    s.add_argument("--batch", type=int, default=None, help="write N movement recordings instead of one")
    s.add_argument("--n-sit", type=int, default=24, help="sit-to-stand count within --batch")
    s.add_argument("--stem", help="file name stem for a single recording")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("device", parents=[common], help="stream a recording over TCP like the wearable")
    s.add_argument("--listen", type=_address, default=("127.0.0.1", 5000))
    s.add_argument("--rate", type=float, default=100.0)
    s.add_argument("--limit-seconds", type=float, default=wire.DEFAULT_LIMIT_S)
    src = s.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=_activity, default=ActivityClass.STATIONARY)
    src.add_argument("--replay", help="recording CSV to stream")
    s.add_argument("--speed", type=float, default=1.0, help="playback speed factor; 0 = unpaced")
    s.add_argument("--sessions", type=int, default=1, help="sessions to serve before exiting")
    s.set_defaults(func=cmd_device)

    s = sub.add_parser("receive", parents=[common], help="record one session from a device")
    s.add_argument("--connect", type=_address, required=True)
    s.add_argument("--out", required=True, help="recording CSV path")
    s.add_argument("--rate", type=float, default=100.0)
    s.add_argument("--limit-seconds", type=float, default=wire.DEFAULT_LIMIT_S)
    s.add_argument("--class", dest="klass", type=_activity, default=ActivityClass.STATIONARY)
    s.add_argument("--movement-onset", type=float, default=None)
    s.add_argument("--timeout", type=float, default=10.0)
    s.set_defaults(func=cmd_receive)

    s = sub.add_parser("process", parents=[common], help="segment recordings and locate pulse landmarks")
    s.add_argument("recordings", nargs="+")
    s.add_argument("--out", default="pulses.csv")
    s.set_defaults(func=cmd_process)

    s = sub.add_parser("features", parents=[common], help="per-pulse feature matrix from pulses.csv")
    s.add_argument("pulses")
    s.add_argument("--out", default="features.csv")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("rank", parents=[common], help="chi-squared feature ranking")
    s.add_argument("features")
    s.add_argument("--out", default="ranking.csv")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("train", parents=[common], help="run the classifier grid")
    s.add_argument("features")
    s.add_argument("--out", default="reports.json")
    s.add_argument("--drop", nargs="*", default=None, help="features to exclude (default dicrotic_magnitude)")
    s.add_argument("--models", nargs="*", default=None, help="preset names (default: all)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("report", parents=[common], help="Model summary CSV and per-class F1 bars from reports.json")
    s.add_argument("reports")
    s.add_argument("--out", default="report")
    s.add_argument("--model", default="Wide ANN", help="model for the F1 bar data")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"ppgposture: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"ppgposture: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
