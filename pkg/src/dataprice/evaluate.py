"""Cross-validated evaluation: fold plans, regression/classification
metrics, the representation x model experiment grid, and mRMR feature-count
curves."""

from __future__ import annotations

import csv
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

from .corpus import (DataProduct, TargetSpec, compose_text, make_targets,
                     structured_matrix)
from .featsel import mrmr_select
from .matrix import FeatureMatrix
from .models import (fit_cart, fit_forest, fit_gbt, fit_linear, fit_logistic,
                     fit_mlp, fit_standardized, fit_svm, fit_svr, one_vs_rest)
from .textrep import (PCAReducer, build_vocabulary, bow, embedding_features,
                      kmeans, membership_probabilities, tfidf, topic_features,
                      train_lda, train_skipgram)

REPRESENTATIONS = ["bow", "tfidf", "word2vec", "lda", "bertopic"]
FAMILIES = ["linear", "mlp", "cart", "svm", "forest", "gbt"]
ERROR_METRICS = ("MSE", "RMSE", "MAPE")
SCORE_METRICS = ("Accuracy", "AUC", "F1")

DEFAULT_CONFIG = {
    "max_terms": 300,
    "word2vec": {"d": 50, "window": 5, "epochs": 3, "lr": 0.05, "negatives": 5},
    "lda": {"n_topics": 8, "iterations": 150, "beta": 0.01},
    "bertopic": {"reduce_dims": 5, "n_clusters": 8},
    "linear": {"ridge": 1.0},
    "logistic": {"lr": 0.5, "epochs": 300},
    "mlp": {"hidden": [32], "epochs": 150, "lr": 0.05, "batch_size": 32},
    "cart": {"max_depth": 8, "min_leaf": 2},
    "svm": {"C": 1.0, "kernel": "rbf", "gamma": 0.01, "tol": 1e-3},
    "svr": {"C": 1.0, "epsilon": 0.1, "kernel": "rbf", "gamma": 0.01,
            "max_iter": 2000},
    "forest": {"n_trees": 25, "max_depth": 10, "min_leaf": 2, "n_threads": 1},
    "gbt": {"n_rounds": 30, "learning_rate": 0.3, "lam": 1.0, "max_depth": 3,
            "min_leaf": 2},
}


class MetricError(ValueError):
    pass


def merge_config(overrides: dict | None) -> dict:
    cfg = {k: (dict(v) if isinstance(v, dict) else v)
           for k, v in DEFAULT_CONFIG.items()}
    for k, v in (overrides or {}).items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(v)
        else:
            cfg[k] = v
    return cfg


def mix_seed(*parts) -> int:
    """Stable derivation of a unit seed from a master seed plus labels."""
    ints = [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1)[0])


# ---------------------------------------------------------------- folds ----

@dataclass
class FoldPlan:
    k: int
    fold_index: np.ndarray
    seed: int

    def train_test(self, fold: int):
        test = np.where(self.fold_index == fold)[0]
        train = np.where(self.fold_index != fold)[0]
        return train, test


def kfold_split(n: int, k: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded shuffle followed by round-robin assignment; fold sizes differ
    by at most one."""
    if n < k:
        raise ValueError("n=%d is smaller than k=%d" % (n, k))
    order = np.random.default_rng(seed).permutation(n)
    fold_index = np.empty(n, dtype=np.int64)
    fold_index[order] = np.arange(n) % k
    return FoldPlan(k, fold_index, seed)


# -------------------------------------------------------------- metrics ----

def regression_metrics(y, yhat, metrics=ERROR_METRICS) -> dict:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if len(y) != len(yhat):
        raise MetricError("length mismatch")
    out = {}
    diff = y - yhat
    if "MSE" in metrics or "RMSE" in metrics:
        mse = float(np.mean(diff ** 2))
        if "MSE" in metrics:
            out["MSE"] = mse
        if "RMSE" in metrics:
            out["RMSE"] = float(np.sqrt(mse))
    if "MAPE" in metrics:
        if np.any(y == 0):
            raise MetricError("MAPE undefined: target contains zero")
        out["MAPE"] = float(np.mean(np.abs(diff) / np.abs(y)))
    return out


def binary_auc(y_true, scores) -> float:
    """Rank-statistic AUC with midrank (0.5) credit for score ties."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[y_true == 1]
    neg = scores[y_true == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise MetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_ranks = ranks[y_true == 1]
    return float((np.sum(pos_ranks) - len(pos) * (len(pos) + 1) / 2.0)
                 / (len(pos) * len(neg)))


def classification_metrics(y, scores, yhat_class) -> dict:
    """Accuracy plus macro AUC and macro F1 over the classes present in y,
    under the one-score-column-per-class convention."""
    y = np.asarray(y, dtype=np.int64)
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    yhat = np.asarray(yhat_class, dtype=np.int64)
    if scores.shape[0] != len(y):
        raise MetricError("score/label shape mismatch")
    present = np.unique(y)
    aucs, f1s = [], []
    for c in present:
        yc = (y == c).astype(np.int64)
        if 0 < yc.sum() < len(yc):
            aucs.append(binary_auc(yc, scores[:, c]))
        tp = int(np.sum((yhat == c) & (y == c)))
        fp = int(np.sum((yhat == c) & (y != c)))
        fn = int(np.sum((yhat != c) & (y == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * precision * recall / (precision + recall)
                   if precision + recall else 0.0)
    return {"Accuracy": float(np.mean(y == yhat)),
            "AUC": float(np.mean(aucs)) if aucs else float("nan"),
            "F1": float(np.mean(f1s))}


# --------------------------------------------------------- featurization ----

def fit_representation(name: str, train_texts: list[str], config: dict,
                       seed: int):
    """Fit one text representation on training documents only. Returns
    (train FeatureMatrix, transform(texts) -> FeatureMatrix)."""
    cfg = merge_config(config)
    max_terms = cfg["max_terms"]
    if name == "bow":
        vocab = build_vocabulary(train_texts, max_terms)
        return bow(train_texts, vocab), lambda texts: bow(texts, vocab)
    if name == "tfidf":
        vocab = build_vocabulary(train_texts, max_terms)
        return tfidf(train_texts, vocab), lambda texts: tfidf(texts, vocab)
    if name == "word2vec":
        w = cfg["word2vec"]
        table = train_skipgram(train_texts, d=w["d"], window=w["window"],
                               epochs=w["epochs"], lr=w["lr"],
                               negatives=w["negatives"], seed=seed,
                               max_terms=max_terms)
        return (embedding_features(train_texts, table),
                lambda texts: embedding_features(texts, table))
    if name == "lda":
        l = cfg["lda"]
        model = train_lda(train_texts, l["n_topics"], beta=l["beta"],
                          iterations=l["iterations"], seed=seed,
                          max_terms=max_terms)
        return (topic_features(model.theta, "lda"),
                lambda texts: topic_features(model.infer_theta(texts), "lda"))
    if name == "bertopic":
        w = cfg["word2vec"]
        b = cfg["bertopic"]
        table = train_skipgram(train_texts, d=w["d"], window=w["window"],
                               epochs=w["epochs"], lr=w["lr"],
                               negatives=w["negatives"], seed=seed,
                               max_terms=max_terms)
        train_vecs = embedding_features(train_texts, table).values
        reducer = PCAReducer.fit(train_vecs, b["reduce_dims"])
        _, centroids = kmeans(reducer.transform(train_vecs), b["n_clusters"],
                              seed=seed)

        def transform(texts):
            vecs = embedding_features(texts, table).values
            member = membership_probabilities(reducer.transform(vecs), centroids)
            return topic_features(member, "bertopic")

        return transform(train_texts), transform
    raise ValueError("unknown representation %r" % name)


def fit_family(family: str, X, y, task: str, n_classes: int, cfg: dict,
               seed: int):
    """Fit one learner family for the given task; returns the fitted model.
    Scale-sensitive families are wrapped with fold-fitted standardization."""
    if task == "regression":
        if family == "linear":
            return fit_standardized(fit_linear, X, y, ridge=cfg["linear"]["ridge"])
        if family == "mlp":
            m = cfg["mlp"]
            return fit_standardized(fit_mlp, X, y, hidden=tuple(m["hidden"]),
                                    epochs=m["epochs"], lr=m["lr"],
                                    batch_size=m["batch_size"], seed=seed,
                                    task="regression")
        if family == "cart":
            c = cfg["cart"]
            return fit_cart(X, y, max_depth=c["max_depth"],
                            min_leaf=c["min_leaf"], task="regression")
        if family == "svm":
            s = cfg["svr"]
            return fit_standardized(fit_svr, X, y, C=s["C"],
                                    epsilon=s["epsilon"], kernel=s["kernel"],
                                    gamma=s["gamma"], max_iter=s["max_iter"])
        if family == "forest":
            f = cfg["forest"]
            p = X.shape[1]
            return fit_forest(X, y, n_trees=f["n_trees"],
                              k_features=max(1, int(np.sqrt(p))),
                              max_depth=f["max_depth"], min_leaf=f["min_leaf"],
                              task="regression", seed=seed,
                              n_threads=f.get("n_threads", 1))
        if family == "gbt":
            g = cfg["gbt"]
            return fit_gbt(X, y, n_rounds=g["n_rounds"],
                           learning_rate=g["learning_rate"], lam=g["lam"],
                           max_depth=g["max_depth"], min_leaf=g["min_leaf"],
                           loss="squared")
        raise ValueError("unknown family %r" % family)

    if family == "linear":
        lg = cfg["logistic"]
        return one_vs_rest(
            lambda Xb, yb: fit_standardized(fit_logistic, Xb, yb,
                                            lr=lg["lr"], epochs=lg["epochs"]),
            X, y, n_classes=n_classes)
    if family == "mlp":
        m = cfg["mlp"]
        return fit_standardized(fit_mlp, X, y, hidden=tuple(m["hidden"]),
                                epochs=m["epochs"], lr=m["lr"],
                                batch_size=m["batch_size"], seed=seed,
                                task="classification", n_classes=n_classes)
    if family == "cart":
        c = cfg["cart"]
        return fit_cart(X, y, max_depth=c["max_depth"], min_leaf=c["min_leaf"],
                        task="classification", n_classes=n_classes)
    if family == "svm":
        s = cfg["svm"]
        return one_vs_rest(
            lambda Xb, yb: fit_standardized(fit_svm, Xb, yb, C=s["C"],
                                            kernel=s["kernel"], gamma=s["gamma"],
                                            tol=s["tol"], seed=seed),
            X, y, n_classes=n_classes, labels="pm1")
    if family == "forest":
        f = cfg["forest"]
        p = X.shape[1]
        return fit_forest(X, y, n_trees=f["n_trees"],
                          k_features=max(1, int(np.sqrt(p))),
                          max_depth=f["max_depth"], min_leaf=f["min_leaf"],
                          task="classification", seed=seed,
                          n_threads=f.get("n_threads", 1))
    if family == "gbt":
        g = cfg["gbt"]
        return one_vs_rest(
            lambda Xb, yb: fit_gbt(Xb, yb, n_rounds=g["n_rounds"],
                                   learning_rate=g["learning_rate"],
                                   lam=g["lam"], max_depth=g["max_depth"],
                                   min_leaf=g["min_leaf"], loss="logistic"),
            X, y, n_classes=n_classes)
    raise ValueError("unknown family %r" % family)


def model_scores(model, X, task: str, n_classes: int):
    """(predictions, score matrix) for metric computation."""
    if task == "regression":
        return model.predict(X), None
    pred = model.predict(X)
    scores = model.predict_scores(X)
    return pred, scores


# ------------------------------------------------------------------ grid ----

@dataclass
class ExperimentReport:
    task: str
    representations: list[str]
    families: list[str]
    metrics: list[str]
    values: dict = field(default_factory=dict)   # metric -> (R, F) array
    mean: dict = field(default_factory=dict)     # metric -> (R,) array
    rank: dict = field(default_factory=dict)     # metric -> (R,) int array
    errors: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def mean_label(self) -> str:
        return "ME" if self.task == "regression" else "MR"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "method"] + self.families
                       + [self.mean_label, "Rank"])
            for metric in self.metrics:
                for i, rep in enumerate(self.representations):
                    w.writerow([metric, rep]
                               + [format(v, ".6f") for v in self.values[metric][i]]
                               + [format(self.mean[metric][i], ".6f"),
                                  int(self.rank[metric][i])])

    def to_text(self) -> str:
        width = max(10, max(len(r) for r in self.representations) + 2)
        cols = self.families + [self.mean_label, "Rank"]
        lines = []
        for key in sorted(self.metadata):
            lines.append("# %s: %s" % (key, self.metadata[key]))
        header = "Method".ljust(width) + "".join(c.rjust(10) for c in cols)
        for metric in self.metrics:
            lines.append("")
            lines.append("== %s ==" % metric)
            lines.append(header)
            for i, rep in enumerate(self.representations):
                row = rep.ljust(width)
                row += "".join(format(v, ".4f").rjust(10)
                               for v in self.values[metric][i])
                row += format(self.mean[metric][i], ".4f").rjust(10)
                row += str(int(self.rank[metric][i])).rjust(10)
                lines.append(row)
        if self.errors:
            lines.append("")
            lines.append("== cell failures ==")
            for rep, fam, fold, msg in self.errors:
                lines.append("%s / %s / fold %s: %s" % (rep, fam, fold, msg))
        return "\n".join(lines) + "\n"


def _rank(means: np.ndarray, ascending: bool) -> np.ndarray:
    key = np.where(np.isnan(means), np.inf, means if ascending else -means)
    order = np.argsort(key, kind="stable")
    ranks = np.empty(len(means), dtype=np.int64)
    ranks[order] = np.arange(1, len(means) + 1)
    return ranks


def run_grid(products: list[DataProduct], representations=None, families=None,
             task: str = "regression", config: dict | None = None,
             seed: int = 0, k: int = 5) -> ExperimentReport:
    """Evaluate every representation x family cell under k-fold CV.

    Vocabularies, embeddings, topic models and standardization are all
    fitted on training folds only. Regression targets are log prices;
    classification targets are five equal-frequency price tiers.
    """
    representations = list(REPRESENTATIONS if representations is None
                           else representations)
    families = list(FAMILIES if families is None else families)
    if not representations or not families:
        raise ValueError("empty grid axes")
    cfg = merge_config(config)
    texts = [compose_text(p) for p in products]
    struct = structured_matrix(products)
    spec = TargetSpec("regression") if task == "regression" else TargetSpec("classification")
    y = make_targets(products, spec)
    n_classes = 5 if task == "classification" else 0
    metrics = list(ERROR_METRICS if task == "regression" else SCORE_METRICS)
    plan = kfold_split(len(products), k, mix_seed(seed, "folds"))

    report = ExperimentReport(task, representations, families, metrics)
    report.metadata["target"] = ("log(price), metrics in log space"
                                 if task == "regression"
                                 else "five equal-frequency price tiers")
    report.metadata["cv"] = "%d-fold, seed %d" % (k, seed)
    acc = {m: np.full((len(representations), len(families), k), np.nan)
           for m in metrics}

    for ri, rep in enumerate(representations):
        for fold in range(k):
            train, test = plan.train_test(fold)
            rep_seed = mix_seed(seed, rep, fold)
            train_texts = [texts[i] for i in train]
            test_texts = [texts[i] for i in test]
            try:
                feats_train, transform = fit_representation(
                    rep, train_texts, cfg, rep_seed)
                feats_test = transform(test_texts)
            except Exception as exc:  # noqa: BLE001 - recorded in the report
                report.errors.append((rep, "*", fold, str(exc)))
                continue
            Xtr = np.hstack([feats_train.values, struct.values[train]])
            Xte = np.hstack([feats_test.values, struct.values[test]])
            for fi, family in enumerate(families):
                try:
                    model = fit_family(family, Xtr, y[train], task, n_classes,
                                       cfg, mix_seed(seed, rep, fold, family))
                    pred, scores = model_scores(model, Xte, task, n_classes)
                    if task == "regression":
                        try:
                            cell = regression_metrics(y[test], pred)
                        except MetricError:
                            cell = regression_metrics(y[test], pred, ("MSE", "RMSE"))
                            cell["MAPE"] = float("nan")
                    else:
                        cell = classification_metrics(y[test], scores, pred)
                    for m in metrics:
                        acc[m][ri, fi, fold] = cell[m]
                except Exception as exc:  # noqa: BLE001
                    report.errors.append((rep, family, fold, str(exc)))

    for m in metrics:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report.values[m] = np.nanmean(acc[m], axis=2)
            report.mean[m] = np.nanmean(report.values[m], axis=1)
        report.rank[m] = _rank(report.mean[m], ascending=m in ERROR_METRICS)
    return report


# ----------------------------------------------------------------- curve ----

@dataclass
class FeatureCurve:
    representation: str
    family: str
    task: str
    rows: list  # (m, {metric: value})

    def to_csv(self, path) -> None:
        metrics = list(self.rows[0][1]) if self.rows else []
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["m"] + metrics)
            for m, vals in self.rows:
                w.writerow([m] + [format(vals[name], ".6f") for name in metrics])


def feature_curve(products: list[DataProduct], representation: str,
                  family: str, m_values, task: str = "regression",
                  config: dict | None = None, seed: int = 0,
                  k: int = 5) -> FeatureCurve:
    """Metric vs number of mRMR-selected features, averaged over CV folds.
    m values beyond the feature count are clamped with a warning."""
    m_values = list(m_values)
    if m_values != sorted(m_values):
        raise ValueError("m_values must be ascending")
    cfg = merge_config(config)
    texts = [compose_text(p) for p in products]
    struct = structured_matrix(products)
    spec = TargetSpec("regression") if task == "regression" else TargetSpec("classification")
    y = make_targets(products, spec)
    n_classes = 5 if task == "classification" else 0
    metrics = list(ERROR_METRICS if task == "regression" else SCORE_METRICS)
    plan = kfold_split(len(products), k, mix_seed(seed, "folds"))

    per_m = {m: {name: [] for name in metrics} for m in m_values}
    clamped = False
    for fold in range(k):
        train, test = plan.train_test(fold)
        rep_seed = mix_seed(seed, representation, fold)
        feats_train, transform = fit_representation(
            representation, [texts[i] for i in train], cfg, rep_seed)
        feats_test = transform([texts[i] for i in test])
        ftr = FeatureMatrix(
            np.hstack([feats_train.values, struct.values[train]]),
            feats_train.columns + struct.columns,
            feats_train.provenance + struct.provenance)
        Xte = np.hstack([feats_test.values, struct.values[test]])
        trace = mrmr_select(ftr, y[train], min(max(m_values), ftr.n_cols),
                            target_is_discrete=task == "classification")
        for m in m_values:
            mm = min(m, ftr.n_cols)
            if mm < m:
                clamped = True
            sel = trace.selected[:mm]
            model = fit_family(family, ftr.values[:, sel], y[train], task,
                               n_classes, cfg,
                               mix_seed(seed, representation, fold, family, m))
            pred, scores = model_scores(model, Xte[:, sel], task, n_classes)
            if task == "regression":
                try:
                    cell = regression_metrics(y[test], pred)
                except MetricError:
                    cell = regression_metrics(y[test], pred, ("MSE", "RMSE"))
                    cell["MAPE"] = float("nan")
            else:
                cell = classification_metrics(y[test], scores, pred)
            for name in metrics:
                per_m[m][name].append(cell[name])
    if clamped:
        warnings.warn("some m values exceeded the feature count and were clamped")
    rows = [(m, {name: float(np.mean(per_m[m][name])) for name in metrics})
            for m in m_values]
    return FeatureCurve(representation, family, task, rows)
