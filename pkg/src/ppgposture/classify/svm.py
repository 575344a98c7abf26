"""One-vs-one support vector machine trained by SMO."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .. import kernels
from .base import Classifier

MAX_PASSES = 50


def kernel_matrix(A, B, kind="linear", degree=3, gamma=None, coef0=1.0):
    """Gram matrix. Polynomial kernels are ``(gamma * a.b + coef0) ** degree``;
    ``gamma`` defaults to ``1 / n_features``."""
    G = A @ B.T
    if kind == "linear":
        return G
    if kind == "poly":
        g = 1.0 / A.shape[1] if gamma is None else gamma
        return (g * G + coef0) ** degree
    raise ValueError(f"unknown kernel {kind!r}")


class SVM(Classifier):
    """C-SVM per class pair; prediction by majority vote, ties to the lower class index."""

    name = "SVM"

    def __init__(self, kernel="linear", degree=3, C=1.0, tol=1e-3, max_passes=MAX_PASSES, gamma=None):
        if C <= 0:
            raise ValueError("C must be positive")
        self.kernel = kernel
        self.degree = degree
        self.C = C
        self.tol = tol
        self.max_passes = max_passes
        self.gamma = gamma

    def _k(self, A, B):
        g = self.gamma if self.gamma is not None else 1.0 / self.n_features_
        return kernel_matrix(A, B, self.kernel, self.degree, g)

    def _fit(self, X, yi):
        self.machines_ = []
        self.n_iter_ = []
        for a, b in combinations(range(self.classes_.shape[0]), 2):
            sel = (yi == a) | (yi == b)
            Xp = X[sel]
            y = np.where(yi[sel] == a, 1.0, -1.0)
            K = self._k(Xp, Xp)
            alpha, rho, it = kernels.smo_solve(K, y, float(self.C), float(self.tol),
                                               int(self.max_passes * y.shape[0]))
            sv = alpha > 0
            self.machines_.append((a, b, Xp[sv].copy(), (alpha * y)[sv], rho))
            self.n_iter_.append(it)

    def decision_function(self, X):
        """Pairwise decision values, one column per class pair (positive favours the first class)."""
        X = self._check_fitted(X)
        out = np.empty((X.shape[0], len(self.machines_)))
        for m, (_, _, sv, coef, rho) in enumerate(self.machines_):
            out[:, m] = (self._k(X, sv) @ coef - rho) if sv.shape[0] else -rho
        return out

    def _predict_index(self, X):
        votes = np.zeros((X.shape[0], self.classes_.shape[0]), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for m, (a, b, sv, coef, rho) in enumerate(self.machines_):
            f = (self._k(X, sv) @ coef - rho) if sv.shape[0] else np.full(X.shape[0], -rho)
            winner = np.where(f > 0, a, b)
            np.add.at(votes, (rows, winner), 1)
        # argmax returns the first maximum, i.e. the lowest class index on ties
        return np.argmax(votes, axis=1)
