"""Per-prediction attributions.

Tree models get exact path-dependent attributions computed from the node
cover counts recorded at fit time; every other model gets a sampling
kernel-weighted least-squares approximation against a background dataset.
Both satisfy local accuracy: the attributions plus the expected value sum
to the model output for the explained row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb

import numpy as np

from .models import CARTModel, ForestModel, GBTModel, OvREnsemble
from .models.base import StandardizedModel
from .textrep.word2vec import EmbeddingTable


class ExplainError(ValueError):
    pass


# ----------------------------------------------------- tree attributions ----

def _extend(path, pz, po, pi):
    """Grow the subset-weight path by one split. Each element is
    [feature, zero_fraction, one_fraction, weight]."""
    path = [p[:] for p in path]
    path.append([pi, pz, po, 1.0 if not path else 0.0])
    l = len(path) - 1
    for i in range(l - 1, -1, -1):
        path[i + 1][3] += po * path[i][3] * (i + 1) / (l + 1)
        path[i][3] = pz * path[i][3] * (l - i) / (l + 1)
    return path


def _unwind(path, i):
    """Undo the extension that added element i."""
    path = [p[:] for p in path]
    l = len(path) - 1
    n = path[l][3]
    z, o = path[i][1], path[i][2]
    for j in range(l - 1, -1, -1):
        if o != 0:
            t = path[j][3]
            path[j][3] = n * (l + 1) / ((j + 1) * o)
            n = t - path[j][3] * z * (l - j) / (l + 1)
        else:
            path[j][3] = path[j][3] * (l + 1) / (z * (l - j))
    for j in range(i, l):
        path[j] = [path[j + 1][0], path[j + 1][1], path[j + 1][2], path[j][3]]
    return path[:-1]


def _unwound_sum(path, i):
    """Total weight the path would carry if element i were removed."""
    l = len(path) - 1
    z, o = path[i][1], path[i][2]
    n = path[l][3]
    total = 0.0
    for j in range(l - 1, -1, -1):
        if o != 0:
            t = n * (l + 1) / ((j + 1) * o)
            total += t
            n = path[j][3] - t * z * (l - j) / (l + 1)
        else:
            total += path[j][3] * (l + 1) / (z * (l - j))
    return total


def _default_leaf_value(node):
    return float(node["value"])


def tree_shap(root, x, n_features: int, leaf_value=_default_leaf_value) -> np.ndarray:
    """Exact per-feature attributions for one tree and one row, following
    split cover fractions down unvisited branches. Returns phi with
    sum(phi) == tree(x) - tree_expected(root)."""
    x = np.asarray(x, dtype=np.float64)
    phi = np.zeros(n_features)

    def recurse(node, path, pz, po, pi):
        path = _extend(path, pz, po, pi)
        if node["leaf"]:
            v = leaf_value(node)
            for i in range(1, len(path)):
                w = _unwound_sum(path, i)
                phi[path[i][0]] += w * (path[i][2] - path[i][1]) * v
            return
        j, thr = node["feature"], node["threshold"]
        hot, cold = ((node["left"], node["right"]) if x[j] <= thr
                     else (node["right"], node["left"]))
        iz, io = 1.0, 1.0
        for k in range(1, len(path)):
            if path[k][0] == j:
                iz, io = path[k][1], path[k][2]
                path = _unwind(path, k)
                break
        recurse(hot, path, iz * hot["n"] / node["n"], io, j)
        recurse(cold, path, iz * cold["n"] / node["n"], 0.0, j)

    recurse(root, [], 1.0, 1.0, -1)
    return phi


def tree_expected(root, leaf_value=_default_leaf_value) -> float:
    """Cover-weighted mean leaf value: the model output for a row about
    which nothing is known."""
    if root["leaf"]:
        return leaf_value(root)
    wl = root["left"]["n"] / root["n"]
    return (wl * tree_expected(root["left"], leaf_value)
            + (1 - wl) * tree_expected(root["right"], leaf_value))


def _class_leaf_value(class_index):
    def value(node):
        if "probs" in node:
            return float(node["probs"][class_index])
        return 1.0 if int(node["value"]) == class_index else 0.0
    return value


def shap_cart(model: CARTModel, x, n_features: int,
              class_index: int | None = None):
    """(phi, expected) for one tree. Classification explains the leaf
    probability of the given class."""
    lv = (_default_leaf_value if model.task == "regression"
          else _class_leaf_value(class_index))
    if model.task == "classification" and class_index is None:
        raise ExplainError("class_index required for classification trees")
    return tree_shap(model.root, x, n_features, lv), tree_expected(model.root, lv)


def shap_forest(model: ForestModel, x, n_features: int,
                class_index: int | None = None):
    """(phi, expected) averaged over trees, with subset-local feature
    indices mapped back to the full feature space. Classification explains
    the vote fraction of the given class (a leaf votes 1 or 0)."""
    if model.task == "classification":
        if class_index is None:
            raise ExplainError("class_index required for classification forests")
        # a tree's vote is its hard prediction, not the leaf probabilities
        lv = lambda node: 1.0 if int(node["value"]) == class_index else 0.0
    else:
        lv = _default_leaf_value
    x = np.asarray(x, dtype=np.float64)
    phi = np.zeros(n_features)
    expected = 0.0
    for tree, subset in zip(model.trees, model.feature_subsets):
        local = tree_shap(tree.root, x[subset], len(subset), lv)
        for li, gi in enumerate(subset):
            phi[gi] += local[li]
        expected += tree_expected(tree.root, lv)
    return phi / len(model.trees), expected / len(model.trees)


def shap_gbt(model: GBTModel, x, n_features: int):
    """(phi, expected) for the raw boosted score (log-odds under the
    logistic loss): learning-rate-scaled sum over rounds plus the base."""
    phi = np.zeros(n_features)
    expected = model.base_score
    for root in model.trees:
        phi += model.learning_rate * tree_shap(root, x, n_features)
        expected += model.learning_rate * tree_expected(root)
    return phi, expected


# --------------------------------------------------------- kernel method ----

def shapley_kernel_weight(n_features: int, subset_size: int) -> float:
    s, M = subset_size, n_features
    if s == 0 or s == M:
        return float("inf")
    return (M - 1) / (comb(M, s) * s * (M - s))


def kernel_shap(predict_fn, x, background, n_samples: int = 2048,
                seed: int = 0):
    """Sampling approximation of per-feature attributions for an arbitrary
    scalar-output model.

    Coalitions are scored by evaluating the model with absent features
    replaced by each background row in turn and averaging. Attributions
    solve the kernel-weighted least squares with the local-accuracy
    constraint enforced exactly. Returns (phi, expected_value)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    M = len(x)
    if background.shape[1] != M:
        raise ExplainError("background column count mismatch")
    f0 = float(np.mean(predict_fn(background)))
    fx = float(np.asarray(predict_fn(x.reshape(1, -1)))[0])
    if M == 1:
        return np.array([fx - f0]), f0

    rng = np.random.default_rng(seed)
    total = 2 ** M - 2 if M <= 30 else n_samples + 1
    if total <= n_samples:
        subsets = []
        weights = []
        for code in range(1, 2 ** M - 1):
            z = np.array([(code >> b) & 1 for b in range(M)], dtype=np.float64)
            subsets.append(z)
            weights.append(shapley_kernel_weight(M, int(z.sum())))
        Z = np.array(subsets)
        w = np.array(weights)
    else:
        sizes = np.arange(1, M)
        size_p = np.array([(M - 1) / (s * (M - s)) for s in sizes])
        size_p /= size_p.sum()
        Z = np.zeros((n_samples, M))
        for i in range(0, n_samples, 2):
            s = int(rng.choice(sizes, p=size_p))
            idx = rng.choice(M, size=s, replace=False)
            Z[i, idx] = 1.0
            if i + 1 < n_samples:
                Z[i + 1] = 1.0 - Z[i]  # paired complement
        w = np.ones(len(Z))

    # model value of each coalition: present features from x, absent ones
    # imputed from every background row, averaged
    nb = background.shape[0]
    fz = np.empty(len(Z))
    for i, z in enumerate(Z):
        rows = np.where(z[None, :] > 0, x[None, :], background)
        fz[i] = float(np.mean(predict_fn(rows)))

    # eliminate the last attribution with the constraint sum(phi) = fx - f0
    y = fz - f0 - Z[:, -1] * (fx - f0)
    A = Z[:, :-1] - Z[:, [-1]]
    sw = np.sqrt(w)
    sol, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    phi = np.empty(M)
    phi[:-1] = sol
    phi[-1] = (fx - f0) - sol.sum()
    return phi, f0


# ---------------------------------------------------------- dispatching ----

def _unwrap(model):
    """Peel standardization for tree dispatch decisions (trees are never
    wrapped; wrapped models always go through the kernel path)."""
    return model.inner if isinstance(model, StandardizedModel) else model


def shap_values(model, X, background=None, n_samples: int = 2048,
                seed: int = 0, class_index: int | None = None):
    """Attribution matrix (one row per explained row) plus the expected
    value. Tree families use the exact tree method; everything else uses
    the kernel method and requires a background dataset.

    For classifiers, class_index picks the score column to explain; it
    defaults to each row's predicted class for the tree method and must be
    given explicitly for the kernel method."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, p = X.shape
    inner = _unwrap(model)

    if isinstance(inner, OvREnsemble) and all(
            isinstance(_unwrap(m), (CARTModel, ForestModel, GBTModel))
            or m.family == "constant_score" for m in inner.members):
        preds = inner.predict(X) if class_index is None else None
        phi = np.zeros((n, p))
        expected = np.zeros(n)
        for i in range(n):
            c = int(class_index if class_index is not None else preds[i])
            member = _unwrap(inner.members[c])
            if member.family == "constant_score":
                expected[i] = member.SCORE
                continue
            phi_row, exp_row = shap_values(member, X[i:i + 1], background,
                                           n_samples, seed)
            phi[i] = phi_row[0]
            expected[i] = exp_row[0]
        return phi, expected

    if isinstance(inner, GBTModel) and inner is model:
        out = np.array([shap_gbt(inner, X[i], p) for i in range(n)], dtype=object)
        return np.stack([o[0] for o in out]), np.array([o[1] for o in out])
    if isinstance(inner, ForestModel) and inner is model:
        cls = None
        if inner.task == "classification":
            preds = inner.predict(X)
        rows = []
        for i in range(n):
            c = (class_index if class_index is not None
                 else (int(preds[i]) if inner.task == "classification" else None))
            rows.append(shap_forest(inner, X[i], p, c))
        return np.stack([r[0] for r in rows]), np.array([r[1] for r in rows])
    if isinstance(inner, CARTModel) and inner is model:
        if inner.task == "classification":
            preds = inner.predict(X)
        rows = []
        for i in range(n):
            c = (class_index if class_index is not None
                 else (int(preds[i]) if inner.task == "classification" else None))
            rows.append(shap_cart(inner, X[i], p, c))
        return np.stack([r[0] for r in rows]), np.array([r[1] for r in rows])

    if background is None:
        raise ExplainError("a background dataset is required for this model")
    if model.task == "classification":
        if class_index is None:
            raise ExplainError("class_index is required to explain a "
                               "classifier with the kernel method")
        fn = lambda rows: np.asarray(model.predict_scores(rows))[:, class_index]
    else:
        fn = lambda rows: np.asarray(model.predict(rows), dtype=np.float64)
    rows = [kernel_shap(fn, X[i], background, n_samples, mix(seed, i))
            for i in range(n)]
    return np.stack([r[0] for r in rows]), np.array([r[1] for r in rows])


def mix(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


# ------------------------------------------------------------- summaries ----

@dataclass
class ImportanceReport:
    columns: list[str]
    mean_abs: np.ndarray  # per-feature mean |attribution|

    def top(self, k: int = 20):
        order = np.argsort(-self.mean_abs, kind="stable")
        return [(self.columns[i], float(self.mean_abs[i])) for i in order[:k]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "feature", "mean_abs_attribution"])
            for r, (name, v) in enumerate(self.top(len(self.columns)), 1):
                w.writerow([r, name, format(v, ".8g")])


def global_importance(phi: np.ndarray, columns: list[str]) -> ImportanceReport:
    phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
    if phi.shape[1] != len(columns):
        raise ExplainError("attribution / column count mismatch")
    return ImportanceReport(list(columns), np.mean(np.abs(phi), axis=0))


def beeswarm_csv(phi: np.ndarray, X: np.ndarray, columns: list[str],
                 path) -> None:
    """Long-format per-point attribution table: one row per (sample,
    feature), carrying the feature value for color mapping downstream."""
    phi = np.atleast_2d(phi)
    X = np.atleast_2d(X)
    if phi.shape != X.shape or phi.shape[1] != len(columns):
        raise ExplainError("shape mismatch between attributions and data")
    order = np.argsort(-np.mean(np.abs(phi), axis=0), kind="stable")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "sample", "feature_value", "attribution"])
        for j in order:
            for i in range(phi.shape[0]):
                w.writerow([columns[j], i, format(X[i, j], ".8g"),
                            format(phi[i, j], ".8g")])


def embedding_keywords(table: EmbeddingTable, dimension: int,
                       k: int = 15) -> dict:
    """Vocabulary terms whose vectors load most strongly on one embedding
    dimension, in both directions — maps an important embedding feature
    back to readable keywords."""
    d = table.input_vectors.shape[1]
    if not 0 <= dimension < d:
        raise ExplainError("dimension %d out of range for %d-dim embeddings"
                           % (dimension, d))
    loadings = table.input_vectors[:, dimension]
    order = np.argsort(-loadings, kind="stable")
    pos = [(table.terms[i], float(loadings[i])) for i in order[:k]]
    neg = [(table.terms[i], float(loadings[i])) for i in order[::-1][:k]]
    return {"positive": pos, "negative": neg}
