"""Shared fit/predict plumbing for the classifiers."""

from __future__ import annotations

import numpy as np


class NotFittedError(RuntimeError):
    pass


def check_X(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array (rows, features)")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    return X


class Classifier:
    """Base class: subclasses implement ``_fit(X, yi)`` and ``_scores(X)`` or ``_predict_index(X)``.

    ``yi`` holds class indices into ``classes_`` (the sorted unique labels).
    """

    name = "classifier"

    def fit(self, X, y):
        X = check_X(X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per row")
        if X.shape[0] == 0:
            raise ValueError("cannot fit on an empty training set")
        self.classes_ = np.unique(y)
        self.n_features_ = X.shape[1]
        self._fit(X, np.searchsorted(self.classes_, y))
        return self

    def _check_fitted(self, X):
        if not hasattr(self, "classes_"):
            raise NotFittedError(f"{type(self).__name__} must be fitted before predict")
        X = check_X(X)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return X

    def predict(self, X):
        X = self._check_fitted(X)
        return self.classes_[self._predict_index(X)]

    def _predict_index(self, X):
        return np.argmax(self._scores(X), axis=1)

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))
