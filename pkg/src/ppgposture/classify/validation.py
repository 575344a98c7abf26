"""Z-score standardisation, stratified hold-out split and stratified k-fold CV."""

from __future__ import annotations

import numpy as np

TEST_FRACTION = 0.1
MIN_CLASS_ROWS = 10


class ValidationError(ValueError):
    pass


class Standardizer:
    """Per-feature z-score; constant features keep unit scale."""

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        self.n_fit_ = X.shape[0]
        return self

    def transform(self, X):
        if not hasattr(self, "mean_"):
            raise ValidationError("Standardizer must be fitted first")
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_

    def fit_transform(self, X):
        return self.fit(X).transform(X)


def _class_name(c, names):
    return names[c] if names is not None and c < len(names) else str(c)


def split_stratified(y, test_fraction=TEST_FRACTION, seed=0, class_names=None):
    """Indices ``(train, test)`` with each class split separately (9:1 by default)."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.shape[0] < MIN_CLASS_ROWS:
            raise ValidationError(
                f"class {_class_name(c, class_names)} has {idx.shape[0]} rows; need {MIN_CLASS_ROWS}"
            )
        idx = rng.permutation(idx)
        n_test = int(round(test_fraction * idx.shape[0]))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_folds(y, k=10, seed=0, class_names=None):
    """``k`` disjoint index arrays covering every row once, class proportions preserved."""
    y = np.asarray(y)
    if k < 2:
        raise ValidationError("need k >= 2 folds")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.shape[0] < k:
            raise ValidationError(
                f"class {_class_name(c, class_names)} has {idx.shape[0]} rows, fewer than k={k} folds"
            )
        for j, i in enumerate(rng.permutation(idx)):
            folds[(offset + j) % k].append(i)
        # rotate so remainders do not always land in the first folds
        offset = (offset + idx.shape[0]) % k
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def cross_validate(X, y, factory, k=10, seed=0, standardize=True):
    """Mean held-out accuracy over stratified folds.

    ``factory()`` returns a fresh unfitted model. Standardisation is fitted on
    each fold's training rows only.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    accs = []
    for fold in stratified_folds(y, k, seed):
        mask = np.ones(y.shape[0], dtype=bool)
        mask[fold] = False
        Xtr, Xte = X[mask], X[fold]
        if standardize:
            sc = Standardizer().fit(Xtr)
            Xtr, Xte = sc.transform(Xtr), sc.transform(Xte)
        model = factory().fit(Xtr, y[mask])
        accs.append(float(np.mean(model.predict(Xte) == y[fold])))
    return float(np.mean(accs))
