"""Linear discriminant, Gaussian naive Bayes, CART and k-nearest-neighbour classifiers."""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .base import Classifier


class LDA(Classifier):
    """Linear discriminant analysis with a pooled within-class covariance.

    A ridge of ``shrinkage * trace / d`` keeps the covariance invertible
    when features are collinear.
    """

    name = "LDA"

    def __init__(self, shrinkage=1e-6):
        self.shrinkage = shrinkage

    def _fit(self, X, yi):
        n, d = X.shape
        k = self.classes_.shape[0]
        self.means_ = np.array([X[yi == c].mean(axis=0) for c in range(k)])
        centred = X - self.means_[yi]
        cov = centred.T @ centred / max(n - k, 1)
        cov += np.eye(d) * self.shrinkage * max(np.trace(cov) / d, 1e-12)
        self.priors_ = np.bincount(yi, minlength=k) / n
        cf = linalg.cho_factor(cov)
        self.coef_ = linalg.cho_solve(cf, self.means_.T).T
        self.intercept_ = -0.5 * np.sum(self.coef_ * self.means_, axis=1) + np.log(self.priors_)

    def _scores(self, X):
        return X @ self.coef_.T + self.intercept_


class GaussianNB(Classifier):
    """Gaussian naive Bayes; variances are floored at ``var_floor`` times the largest feature variance."""

    name = "Gaussian NB"

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def _fit(self, X, yi):
        k = self.classes_.shape[0]
        eps = self.var_floor * max(float(np.var(X, axis=0).max()), 1e-300)
        self.theta_ = np.array([X[yi == c].mean(axis=0) for c in range(k)])
        self.var_ = np.array([X[yi == c].var(axis=0) for c in range(k)]) + eps
        self.log_prior_ = np.log(np.bincount(yi, minlength=k) / X.shape[0])

    def _scores(self, X):
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_), axis=1)
        diff = X[:, None, :] - self.theta_[None, :, :]
        ll = ll - 0.5 * np.sum(diff**2 / self.var_[None, :, :], axis=2)
        return ll + self.log_prior_


class DecisionTree(Classifier):
    """CART with Gini impurity and axis-aligned thresholds at midpoints."""

    name = "Decision Tree"

    def __init__(self, max_depth=12, min_leaf=5):
        if max_depth < 0 or min_leaf < 1:
            raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def _fit(self, X, yi):
        k = self.classes_.shape[0]
        # parallel node arrays; leaves have feature == -1
        self.feature_, self.threshold_, self.left_, self.right_, self.value_ = [], [], [], [], []
        self._grow(X, yi, k, 0)
        self.feature_ = np.array(self.feature_)
        self.threshold_ = np.array(self.threshold_)
        self.left_ = np.array(self.left_)
        self.right_ = np.array(self.right_)
        self.value_ = np.array(self.value_)

    def _new_node(self, counts):
        self.feature_.append(-1)
        self.threshold_.append(0.0)
        self.left_.append(-1)
        self.right_.append(-1)
        self.value_.append(counts)
        return len(self.feature_) - 1

    def _grow(self, X, yi, k, depth):
        counts = np.bincount(yi, minlength=k)
        node = self._new_node(counts)
        if depth >= self.max_depth or X.shape[0] < 2 * self.min_leaf or np.count_nonzero(counts) < 2:
            return node
        split = self._best_split(X, yi, k)
        if split is None:
            return node
        j, thr = split
        mask = X[:, j] <= thr
        self.feature_[node] = j
        self.threshold_[node] = thr
        self.left_[node] = self._grow(X[mask], yi[mask], k, depth + 1)
        self.right_[node] = self._grow(X[~mask], yi[~mask], k, depth + 1)
        return node

    def _best_split(self, X, yi, k):
        n = X.shape[0]
        onehot = np.eye(k)[yi]
        total = onehot.sum(axis=0)
        parent = 1.0 - np.sum((total / n) ** 2)
        best_gain, best = 1e-12, None
        m = self.min_leaf
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            left = np.cumsum(onehot[order], axis=0)[:-1]
            nl = np.arange(1, n, dtype=np.float64)
            nr = n - nl
            right = total - left
            gini_l = 1.0 - np.sum(left**2, axis=1) / nl**2
            gini_r = 1.0 - np.sum(right**2, axis=1) / nr**2
            gain = parent - (nl * gini_l + nr * gini_r) / n
            valid = (xs[1:] > xs[:-1]) & (nl >= m) & (nr >= m)
            if not valid.any():
                continue
            gain = np.where(valid, gain, -np.inf)
            i = int(np.argmax(gain))
            if gain[i] > best_gain:
                best_gain = gain[i]
                best = (j, 0.5 * (xs[i] + xs[i + 1]))
        return best

    def _scores(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature_[nd]] <= self.threshold_[nd]
            node[idx] = np.where(go_left, self.left_[nd], self.right_[nd])
            active = self.feature_[node] >= 0
        v = self.value_[node].astype(np.float64)
        return v / v.sum(axis=1, keepdims=True)

    @property
    def n_nodes(self):
        return len(self.feature_)


class KNN(Classifier):
    """Majority vote among the ``k`` nearest training rows (Euclidean).

    Distance ties keep training order. A tied vote goes to whichever of the
    tied classes owns the nearest neighbour.
    """

    name = "KNN"

    def __init__(self, k=1, block=64):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.block = block

    def _fit(self, X, yi):
        self.X_ = X.copy()
        self.yi_ = yi.copy()

    def _predict_index(self, X):
        k = min(self.k, self.X_.shape[0])
        ncls = self.classes_.shape[0]
        out = np.empty(X.shape[0], dtype=np.int64)
        for s in range(0, X.shape[0], self.block):
            q = X[s : s + self.block]
            # explicit differences keep exact duplicates at distance zero
            d2 = np.sum((q[:, None, :] - self.X_[None, :, :]) ** 2, axis=2)
            nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
            labs = self.yi_[nn]
            for r in range(q.shape[0]):
                votes = np.bincount(labs[r], minlength=ncls)
                top = np.flatnonzero(votes == votes.max())
                if top.size == 1:
                    out[s + r] = top[0]
                else:
                    out[s + r] = labs[r][np.isin(labs[r], top)][0]
        return out
