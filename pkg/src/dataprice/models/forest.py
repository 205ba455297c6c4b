"""Random forest: per-tree bootstrap sample and per-tree random feature
subset, with per-tree RNGs derived from (seed, tree index) so results do
not depend on scheduling."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .base import Model, ModelError, register
from .tree import CARTModel, fit_cart, tree_predict_row


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


def _default_row_sampler(rng, n, m):
    return rng.integers(0, n, size=m)


@register
class ForestModel(Model):
    family = "forest"

    def __init__(self, trees, feature_subsets, n_classes=None, **kw):
        task = "regression" if n_classes is None else "classification"
        super().__init__(task, **kw)
        self.trees = trees  # CARTModel fitted on the subset columns
        self.feature_subsets = [list(map(int, fs)) for fs in feature_subsets]
        self.n_classes = n_classes

    def _tree_votes(self, X):
        return [tree.predict(X[:, fs])
                for tree, fs in zip(self.trees, self.feature_subsets)]

    def predict(self, X):
        X = self._check_input(X)
        votes = np.array(self._tree_votes(X))
        if self.task == "regression":
            return votes.mean(axis=0)
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            counts = np.bincount(votes[:, i].astype(np.int64),
                                 minlength=self.n_classes)
            out[i] = int(np.argmax(counts))  # argmax takes the lower class on ties
        return out

    def predict_scores(self, X):
        """Vote fractions per class (classification only)."""
        if self.task != "classification":
            raise ModelError("scores are only defined for classification forests")
        X = self._check_input(X)
        votes = np.array(self._tree_votes(X)).astype(np.int64)
        scores = np.zeros((X.shape[0], self.n_classes))
        for t in range(votes.shape[0]):
            scores[np.arange(X.shape[0]), votes[t]] += 1.0
        return scores / votes.shape[0]

    def params_dict(self):
        return {"trees": [t.params_dict() for t in self.trees],
                "feature_subsets": self.feature_subsets,
                "n_classes": self.n_classes}

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        trees = [CARTModel(p["root"], p["n_classes"]) for p in params["trees"]]
        return cls(trees, params["feature_subsets"], params["n_classes"],
                   hyperparams=hyperparams, manifest=manifest, seed=seed)


def fit_forest(X, y, n_trees: int = 100, m_samples: int | None = None,
               k_features: int | None = None, max_depth: int = 12,
               min_leaf: int = 1, task: str = "regression", seed: int = 0,
               n_threads: int = 1, row_sampler=_default_row_sampler,
               manifest=None) -> ForestModel:
    if n_trees < 1:
        raise ModelError("n_trees must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, p = X.shape
    m = n if m_samples is None else m_samples
    k = p if k_features is None else k_features
    if m > n or k > p:
        raise ModelError("m_samples/k_features exceed the data dimensions")
    if task == "classification":
        y = np.asarray(y, dtype=np.int64)
        n_classes = int(y.max()) + 1
    else:
        y = np.asarray(y, dtype=np.float64)
        n_classes = None

    def build(t):
        rng = _tree_rng(seed, t)
        rows = row_sampler(rng, n, m)
        feats = np.sort(rng.choice(p, size=k, replace=False))
        tree = fit_cart(X[np.ix_(rows, feats)], y[rows], max_depth=max_depth,
                        min_leaf=min_leaf, task=task, n_classes=n_classes)
        return tree, feats

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(build, range(n_trees)))
    else:
        results = [build(t) for t in range(n_trees)]
    trees = [r[0] for r in results]
    subsets = [r[1] for r in results]
    return ForestModel(trees, subsets, n_classes,
                       hyperparams={"n_trees": n_trees, "m_samples": m,
                                    "k_features": k, "max_depth": max_depth,
                                    "min_leaf": min_leaf},
                       manifest=manifest, seed=seed)
