"""Preset grid: split -> cross-validate -> fit -> test, reported as one summary CSV."""

from __future__ import annotations

import csv
import logging
import time

import numpy as np

from ..recording import CLASS_ORDER
from .ann import ANN
from .metrics import ModelReport, evaluate
from .models import KNN, LDA, DecisionTree, GaussianNB
from .svm import SVM
from .validation import Standardizer, cross_validate, split_stratified

log = logging.getLogger(__name__)


def _presets():
    return {
        "LDA": lambda seed, hp: LDA(shrinkage=hp.get("lda_shrinkage", 1e-6)),
        "Gaussian NB": lambda seed, hp: GaussianNB(var_floor=hp.get("nb_var_floor", 1e-9)),
        "Decision Tree": lambda seed, hp: DecisionTree(
            max_depth=int(hp.get("tree_max_depth", 12)), min_leaf=int(hp.get("tree_min_leaf", 5))
        ),
        "Fine KNN": lambda seed, hp: KNN(k=1),
        "Medium KNN": lambda seed, hp: KNN(k=10),
        "Coarse KNN": lambda seed, hp: KNN(k=100),
        "Linear SVM": lambda seed, hp: _svm("linear", 1, hp),
        "Quadratic SVM": lambda seed, hp: _svm("poly", 2, hp),
        "Cubic SVM": lambda seed, hp: _svm("poly", 3, hp),
        "Narrow ANN": lambda seed, hp: _ann(10, seed, hp),
        "Medium ANN": lambda seed, hp: _ann(25, seed, hp),
        "Wide ANN": lambda seed, hp: _ann(100, seed, hp),
    }


def _svm(kind, degree, hp):
    return SVM(kernel=kind, degree=degree, C=float(hp.get("svm_c", 1.0)), tol=float(hp.get("svm_tol", 1e-3)),
               max_passes=int(hp.get("svm_max_passes", 50)))


def _ann(hidden, seed, hp):
    return ANN(hidden=hidden, lr=float(hp.get("ann_lr", 0.01)), momentum=float(hp.get("ann_momentum", 0.9)),
               batch_size=int(hp.get("ann_batch_size", 32)), max_epochs=int(hp.get("ann_max_epochs", 500)),
               patience=int(hp.get("ann_patience", 50)), seed=seed)


PRESETS = tuple(_presets())


def make_model(name, seed=0, hyperparams=None):
    try:
        factory = _presets()[name]
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}; choose from {', '.join(PRESETS)}") from None
    model = factory(seed, hyperparams or {})
    model.name = name
    return model


def run_preset(name, X, y, train, test, seed=0, k=10, hyperparams=None, classes=None):
    """One grid row: CV accuracy on the training split, then fit and score on the test split."""
    Xtr, ytr = X[train], y[train]
    val = 100.0 * cross_validate(Xtr, ytr, lambda: make_model(name, seed, hyperparams), k=k, seed=seed)
    sc = Standardizer().fit(Xtr)
    model = make_model(name, seed, hyperparams).fit(sc.transform(Xtr), ytr)
    _, rep = evaluate(model, sc.transform(X[test]), y[test], classes=classes, name=name,
                      validation_accuracy=val)
    return rep, model, sc


def benchmark_grid(X, y, presets=PRESETS, seed=0, k=10, hyperparams=None, classes=None):
    """Run every preset on one stratified 9:1 split; failures become marked rows."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = tuple(range(len(CLASS_ORDER))) if classes is None else tuple(classes)
    train, test = split_stratified(y, seed=seed, class_names=[c.value for c in CLASS_ORDER])
    reports = []
    for name in presets:
        t0 = time.perf_counter()
        try:
            rep, _, _ = run_preset(name, X, y, train, test, seed, k, hyperparams, classes)
        except Exception as exc:  # keep the grid going; the row records the failure
            log.warning("preset %s failed: %s", name, exc)
            rep = ModelReport(name, float("nan"), float("nan"), {}, {}, {}, failed=str(exc) or type(exc).__name__)
        log.info("%s: val %.2f test %.2f (%.1f s)", name, rep.validation_accuracy, rep.test_accuracy,
                 time.perf_counter() - t0)
        reports.append(rep)
    return reports


def _fmt(v):
    return "" if v is None or not np.isfinite(v) else f"{v:.2f}"


def summary_rows(reports, class_names=None):
    class_names = class_names or [c.value for c in CLASS_ORDER]
    header = ["model", "validation_accuracy", "test_accuracy"] + [f"f1_{n}" for n in class_names] + ["mean_f1", "status"]
    rows = [header]
    for r in reports:
        if r.failed:
            rows.append([r.model, "", ""] + [""] * len(class_names) + ["", f"failed: {r.failed}"])
            continue
        f1 = [r.f1.get(i, float("nan")) for i in range(len(class_names))]
        rows.append([r.model, _fmt(r.validation_accuracy), _fmt(r.test_accuracy)] + [_fmt(v) for v in f1]
                    + [_fmt(r.mean_f1), "ok"])
    return rows


def write_summary_csv(reports, path, class_names=None):
    with open(path, "w", newline="", encoding="utf-8") as f:
        csv.writer(f, lineterminator="\n").writerows(summary_rows(reports, class_names))


def write_f1_bars_csv(report, path, class_names=None):
    """Per-class precision, sensitivity and F1 of one model, ready for a bar chart."""
    class_names = class_names or [c.value for c in CLASS_ORDER]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["model", "class", "precision", "sensitivity", "f1"])
        for i, n in enumerate(class_names):
            w.writerow([report.model, n, _fmt(report.precision.get(i)), _fmt(report.sensitivity.get(i)),
                        _fmt(report.f1.get(i))])
