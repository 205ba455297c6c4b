"""Gradient-boosted trees with second-order split gain and leaf weights.

Each round fits a regression tree to the first/second derivatives of the
loss at the current prediction: leaf weight w* = -G / (H + lambda), split
gain 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma.
Squared error uses g = yhat - y, h = 1; binary classification uses the
logistic loss with g = p - y, h = p(1-p).
"""

from __future__ import annotations

import numpy as np

from .base import Model, ModelError, register
from .tree import tree_predict_row


def _leaf_weight(G, H, lam):
    return -G / (H + lam)


def _grow(X, g, h, depth, max_depth, min_leaf, lam, gamma_pen, feature_indices):
    n = len(g)
    G, H = float(np.sum(g)), float(np.sum(h))
    if depth >= max_depth or n < 2 * min_leaf:
        return {"leaf": True, "value": _leaf_weight(G, H, lam), "n": n}
    best = None
    for j in feature_indices:
        xj = X[:, j]
        order = np.argsort(xj, kind="stable")
        xs = xj[order]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        pos = np.arange(1, n)
        gain = 0.5 * (gl ** 2 / (hl + lam) + (G - gl) ** 2 / (H - hl + lam)
                      - G ** 2 / (H + lam)) - gamma_pen
        ok = valid & (pos >= min_leaf) & ((n - pos) >= min_leaf)
        gain = np.where(ok, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > 1e-12 and (best is None or gain[k] > best[0]):
            best = (float(gain[k]), j, float((xs[k] + xs[k + 1]) / 2))
    if best is None:
        return {"leaf": True, "value": _leaf_weight(G, H, lam), "n": n}
    _, j, thr = best
    mask = X[:, j] <= thr
    return {
        "leaf": False, "feature": int(j), "threshold": thr, "n": n,
        "left": _grow(X[mask], g[mask], h[mask], depth + 1, max_depth,
                      min_leaf, lam, gamma_pen, feature_indices),
        "right": _grow(X[~mask], g[~mask], h[~mask], depth + 1, max_depth,
                       min_leaf, lam, gamma_pen, feature_indices),
    }


@register
class GBTModel(Model):
    family = "gbt"

    def __init__(self, trees, base_score, learning_rate, loss, **kw):
        task = "regression" if loss == "squared" else "classification"
        super().__init__(task, **kw)
        self.trees = trees  # list of tree roots
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.loss = loss

    def predict_raw(self, X):
        X = self._check_input(X)
        out = np.full(X.shape[0], self.base_score)
        for root in self.trees:
            out += self.learning_rate * np.array(
                [tree_predict_row(root, x)["value"] for x in X])
        return out

    def predict_proba(self, X):
        if self.loss != "logistic":
            raise ModelError("probabilities need the logistic loss")
        return 1.0 / (1.0 + np.exp(-self.predict_raw(X)))

    def scores(self, X):
        return self.predict_proba(X)

    def predict(self, X):
        raw = self.predict_raw(X)
        if self.loss == "squared":
            return raw
        return (raw >= 0).astype(np.int64)

    def params_dict(self):
        return {"trees": self.trees, "base_score": self.base_score,
                "learning_rate": self.learning_rate, "loss": self.loss}

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        return cls(params["trees"], params["base_score"],
                   params["learning_rate"], params["loss"],
                   hyperparams=hyperparams, manifest=manifest, seed=seed)


def fit_gbt(X, y, n_rounds: int = 50, learning_rate: float = 0.3,
            lam: float = 1.0, gamma_pen: float = 0.0, max_depth: int = 3,
            min_leaf: int = 1, loss: str = "squared",
            manifest=None) -> GBTModel:
    """Boost n_rounds trees. Base score is the target mean for squared loss
    and the empirical log-odds for the logistic loss (y in {0,1})."""
    if n_rounds < 1:
        raise ModelError("n_rounds must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if loss == "squared":
        base = float(np.mean(y))
    elif loss == "logistic":
        p = float(np.clip(np.mean(y), 1e-6, 1.0 - 1e-6))
        base = float(np.log(p / (1.0 - p)))
    else:
        raise ModelError("unknown loss %r" % loss)

    raw = np.full(len(y), base)
    trees = []
    features = list(range(X.shape[1]))
    for _ in range(n_rounds):
        if loss == "squared":
            g = raw - y
            h = np.ones_like(y)
        else:
            prob = 1.0 / (1.0 + np.exp(-raw))
            g = prob - y
            h = prob * (1.0 - prob)
        root = _grow(X, g, h, 0, max_depth, min_leaf, lam, gamma_pen, features)
        trees.append(root)
        raw += learning_rate * np.array([tree_predict_row(root, x)["value"]
                                         for x in X])
    return GBTModel(trees, base, learning_rate, loss,
                    hyperparams={"n_rounds": n_rounds,
                                 "learning_rate": learning_rate, "lam": lam,
                                 "gamma_pen": gamma_pen, "max_depth": max_depth,
                                 "min_leaf": min_leaf})
