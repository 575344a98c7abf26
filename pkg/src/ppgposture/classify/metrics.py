"""Confusion counts and the accuracy / precision / sensitivity / F1 report."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def ratio(num, den):
    """Percentage ``100 * num / den``; ``(0.0, True)`` flags an undefined ratio."""
    if den == 0:
        return 0.0, True
    return 100.0 * num / den, False


def class_metrics(tp, fp, fn):
    """Precision, sensitivity and F1 (percent) plus the names of undefined metrics."""
    precision, p_undef = ratio(tp, tp + fp)
    sensitivity, s_undef = ratio(tp, tp + fn)
    f1, f_undef = ratio(2.0 * precision * sensitivity, precision + sensitivity)
    f1 /= 100.0
    undefined = [n for n, u in (("precision", p_undef), ("sensitivity", s_undef), ("f1", f_undef)) if u]
    return precision, sensitivity, f1, undefined


@dataclass
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray
    classes: tuple

    @classmethod
    def from_labels(cls, y_true, y_pred, classes):
        classes = tuple(classes)
        pos = {c: i for i, c in enumerate(classes)}
        m = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for t, p in zip(np.asarray(y_true).tolist(), np.asarray(y_pred).tolist()):
            m[pos[t], pos[p]] += 1
        return cls(m, classes)

    @property
    def total(self):
        return int(self.counts.sum())

    def tp(self, i):
        return int(self.counts[i, i])

    def fp(self, i):
        return int(self.counts[:, i].sum() - self.counts[i, i])

    def fn(self, i):
        return int(self.counts[i, :].sum() - self.counts[i, i])

    def tn(self, i):
        return self.total - self.tp(i) - self.fp(i) - self.fn(i)

    def one_vs_rest(self, i):
        return {"TP": self.tp(i), "TN": self.tn(i), "FP": self.fp(i), "FN": self.fn(i)}

    @property
    def accuracy(self):
        return 100.0 * np.trace(self.counts) / self.total if self.total else 0.0


@dataclass
class ModelReport:
    model: str
    validation_accuracy: float
    test_accuracy: float
    precision: dict
    sensitivity: dict
    f1: dict
    confusion: ConfusionMatrix | None = None
    undefined: dict = field(default_factory=dict)
    failed: str = ""

    @property
    def mean_f1(self):
        return float(np.mean(list(self.f1.values()))) if self.f1 else 0.0


def report_from_confusion(name, cm, validation_accuracy=float("nan")):
    precision, sensitivity, f1, undefined = {}, {}, {}, {}
    for i, c in enumerate(cm.classes):
        p, s, f, u = class_metrics(cm.tp(i), cm.fp(i), cm.fn(i))
        precision[c], sensitivity[c], f1[c] = p, s, f
        if u:
            undefined[c] = u
    return ModelReport(name, validation_accuracy, cm.accuracy, precision, sensitivity, f1, cm, undefined)


def evaluate(model, X_test, y_test, classes=None, name=None, validation_accuracy=float("nan")):
    """Confusion matrix and report of a fitted model on held-out rows."""
    y_test = np.asarray(y_test)
    if y_test.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty test set")
    pred = model.predict(X_test)
    if classes is None:
        classes = tuple(np.unique(np.concatenate([model.classes_, y_test])).tolist())
    cm = ConfusionMatrix.from_labels(y_test, pred, classes)
    return cm, report_from_confusion(name or model.name, cm, validation_accuracy)
