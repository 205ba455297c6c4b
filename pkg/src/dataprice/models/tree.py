"""CART decision trees: squared error for regression, gini for
classification. Split candidates are midpoints between consecutive sorted
distinct values; ties break toward the lower feature index, then the lower
threshold. Rows with feature value <= threshold go left."""

from __future__ import annotations

import numpy as np

from .base import Model, ModelError, register


def _best_split(X, y, feature_indices, min_leaf, n_classes):
    """Return (impurity_decrease, feature, threshold) or None.

    Uses the sum-of-squares identity: the decrease equals
    s_L^2/n_L + s_R^2/n_R - S^2/n for regression, and the analogous
    per-class squared-count expression for gini.
    """
    n = len(y)
    best = None
    if n_classes is not None:
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y.astype(np.int64)] = 1.0
    for j in feature_indices:
        xj = X[:, j]
        order = np.argsort(xj, kind="stable")
        xs = xj[order]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        pos = np.arange(1, n)  # left size at each boundary
        if n_classes is None:
            ys = y[order]
            cum = np.cumsum(ys)[:-1]
            total = float(np.sum(ys))
            left = cum ** 2 / pos
            right = (total - cum) ** 2 / (n - pos)
            decrease = left + right - total ** 2 / n
        else:
            cum = np.cumsum(onehot[order], axis=0)[:-1]
            total = cum[-1] + onehot[order][-1]
            left = np.sum(cum ** 2, axis=1) / pos
            right = np.sum((total[None, :] - cum) ** 2, axis=1) / (n - pos)
            decrease = left + right - float(np.sum(total ** 2)) / n
        ok = valid & (pos >= min_leaf) & ((n - pos) >= min_leaf)
        if not ok.any():
            continue
        decrease = np.where(ok, decrease, -np.inf)
        k = int(np.argmax(decrease))
        if decrease[k] > 1e-12 and (best is None or decrease[k] > best[0]):
            best = (float(decrease[k]), j, float((xs[k] + xs[k + 1]) / 2))
    return best


def _leaf(y, n_classes):
    if n_classes is None:
        return {"leaf": True, "value": float(np.mean(y)), "n": len(y)}
    counts = np.bincount(y.astype(np.int64), minlength=n_classes)
    probs = counts / counts.sum()
    return {"leaf": True, "value": int(np.argmax(counts)),
            "probs": probs.tolist(), "n": len(y)}


def _grow(X, y, depth, max_depth, min_leaf, n_classes, feature_indices):
    if depth >= max_depth or len(y) < 2 * min_leaf or len(np.unique(y)) == 1:
        return _leaf(y, n_classes)
    split = _best_split(X, y, feature_indices, min_leaf, n_classes)
    if split is None:
        return _leaf(y, n_classes)
    _, j, thr = split
    mask = X[:, j] <= thr
    return {
        "leaf": False, "feature": int(j), "threshold": thr, "n": len(y),
        "left": _grow(X[mask], y[mask], depth + 1, max_depth, min_leaf,
                      n_classes, feature_indices),
        "right": _grow(X[~mask], y[~mask], depth + 1, max_depth, min_leaf,
                       n_classes, feature_indices),
    }


def tree_predict_row(node, x):
    while not node["leaf"]:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node


@register
class CARTModel(Model):
    family = "cart"

    def __init__(self, root, n_classes=None, **kw):
        task = "regression" if n_classes is None else "classification"
        super().__init__(task, **kw)
        self.root = root
        self.n_classes = n_classes

    def predict(self, X):
        X = self._check_input(X)
        out = [tree_predict_row(self.root, x)["value"] for x in X]
        if self.task == "classification":
            return np.array(out, dtype=np.int64)
        return np.array(out, dtype=np.float64)

    def predict_scores(self, X):
        """Leaf class proportions per row (classification only)."""
        if self.task != "classification":
            raise ModelError("scores are only defined for classification trees")
        X = self._check_input(X)
        return np.array([tree_predict_row(self.root, x)["probs"] for x in X])

    def params_dict(self):
        return {"root": self.root, "n_classes": self.n_classes}

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        return cls(params["root"], params["n_classes"], hyperparams=hyperparams,
                   manifest=manifest, seed=seed)


def fit_cart(X, y, max_depth: int = 10, min_leaf: int = 1,
             task: str = "regression", n_classes: int | None = None,
             feature_indices=None, manifest=None) -> CARTModel:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if task == "classification":
        y = np.asarray(y, dtype=np.int64)
        if n_classes is None:
            n_classes = int(y.max()) + 1
    else:
        y = np.asarray(y, dtype=np.float64)
        n_classes = None
    if len(y) < min_leaf:
        raise ModelError("fewer rows than min_leaf")
    if feature_indices is None:
        feature_indices = range(X.shape[1])
    root = _grow(X, y, 0, max_depth, min_leaf, n_classes, list(feature_indices))
    return CARTModel(root, n_classes,
                     hyperparams={"max_depth": max_depth, "min_leaf": min_leaf},
                     manifest=manifest)


def gini(y, n_classes=None) -> float:
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y, minlength=n_classes or 0)
    p = counts / counts.sum()
    return float(1.0 - np.sum(p ** 2))
