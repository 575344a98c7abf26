"""Single-hidden-layer network: ReLU hidden units, softmax output, cross-entropy loss."""

from __future__ import annotations

import numpy as np

from .base import Classifier


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class ANN(Classifier):
    """Mini-batch gradient descent with momentum and early stopping.

    A stratified 10% of the training rows is held out to monitor the loss;
    training stops after ``patience`` epochs without improvement and the
    best weights are restored.
    """

    name = "ANN"

    def __init__(self, hidden=100, lr=0.01, momentum=0.9, batch_size=32, max_epochs=500,
                 patience=50, val_fraction=0.1, seed=0):
        if hidden < 1:
            raise ValueError("hidden must be >= 1")
        self.hidden = hidden
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.seed = seed

    def init_params(self, n_in, n_out, rng):
        # He initialisation for the ReLU layer, Glorot-style scale for the output
        self.params_ = {
            "W1": rng.normal(0.0, np.sqrt(2.0 / n_in), (n_in, self.hidden)),
            "b1": np.zeros(self.hidden),
            "W2": rng.normal(0.0, np.sqrt(1.0 / self.hidden), (self.hidden, n_out)),
            "b2": np.zeros(n_out),
        }

    def forward(self, X):
        p = self.params_
        h_pre = X @ p["W1"] + p["b1"]
        h = np.maximum(h_pre, 0.0)
        return h_pre, h, softmax(h @ p["W2"] + p["b2"])

    def loss_and_grad(self, X, yi):
        """Mean cross-entropy and its gradient with respect to every parameter."""
        p = self.params_
        n = X.shape[0]
        h_pre, h, prob = self.forward(X)
        loss = -float(np.mean(np.log(np.clip(prob[np.arange(n), yi], 1e-300, None))))
        d_out = prob.copy()
        d_out[np.arange(n), yi] -= 1.0
        d_out /= n
        d_h = (d_out @ p["W2"].T) * (h_pre > 0)
        grads = {
            "W1": X.T @ d_h,
            "b1": d_h.sum(axis=0),
            "W2": h.T @ d_out,
            "b2": d_out.sum(axis=0),
        }
        return loss, grads

    def loss(self, X, yi):
        _, _, prob = self.forward(X)
        return -float(np.mean(np.log(np.clip(prob[np.arange(X.shape[0]), yi], 1e-300, None))))

    def _holdout(self, yi, rng):
        val = []
        for c in np.unique(yi):
            idx = rng.permutation(np.flatnonzero(yi == c))
            n_val = int(round(self.val_fraction * idx.shape[0]))
            if idx.shape[0] - n_val >= 1:
                val.extend(idx[:n_val].tolist())
        mask = np.zeros(yi.shape[0], dtype=bool)
        mask[val] = True
        return mask

    def _fit(self, X, yi):
        rng = np.random.default_rng(self.seed)
        self.init_params(X.shape[1], self.classes_.shape[0], rng)
        val = self._holdout(yi, rng) if self.val_fraction > 0 else np.zeros(yi.shape[0], bool)
        Xt, yt = X[~val], yi[~val]
        Xv, yv = (X[val], yi[val]) if val.any() else (Xt, yt)
        vel = {k: np.zeros_like(v) for k, v in self.params_.items()}
        best = (np.inf, {k: v.copy() for k, v in self.params_.items()}, 0)
        self.train_loss_ = []
        self.val_loss_ = []
        stale = 0
        for epoch in range(self.max_epochs):
            order = rng.permutation(Xt.shape[0])
            for s in range(0, order.shape[0], self.batch_size):
                b = order[s : s + self.batch_size]
                _, g = self.loss_and_grad(Xt[b], yt[b])
                for k in self.params_:
                    vel[k] = self.momentum * vel[k] - self.lr * g[k]
                    self.params_[k] += vel[k]
            self.train_loss_.append(self.loss(Xt, yt))
            vl = self.loss(Xv, yv)
            self.val_loss_.append(vl)
            if vl < best[0] - 1e-6:
                best = (vl, {k: v.copy() for k, v in self.params_.items()}, epoch + 1)
                stale = 0
            else:
                stale += 1
                if stale >= self.patience:
                    break
        self.params_ = best[1]
        self.best_epoch_ = best[2]
        self.n_epochs_ = len(self.train_loss_)

    def _scores(self, X):
        return self.forward(X)[2]

    def predict_proba(self, X):
        return self._scores(self._check_fitted(X))

    # flat parameter access for gradient checking
    def get_flat(self):
        return np.concatenate([self.params_[k].ravel() for k in ("W1", "b1", "W2", "b2")])

    def set_flat(self, theta):
        i = 0
        for k in ("W1", "b1", "W2", "b2"):
            size = self.params_[k].size
            self.params_[k] = theta[i : i + size].reshape(self.params_[k].shape).copy()
            i += size

    def flat_grad(self, X, yi):
        loss, g = self.loss_and_grad(X, yi)
        return loss, np.concatenate([g[k].ravel() for k in ("W1", "b1", "W2", "b2")])
