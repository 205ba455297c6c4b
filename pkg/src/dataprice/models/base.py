"""Shared model plumbing: base class, persistence envelope, standardization."""

from __future__ import annotations

import json

import numpy as np

FORMAT_VERSION = 1

_REGISTRY: dict[str, type] = {}


class ModelError(ValueError):
    pass


def register(cls):
    _REGISTRY[cls.family] = cls
    return cls


class Model:
    """Base fitted model. Subclasses set `family`, implement predict() and
    the params_dict()/from_params() persistence pair."""

    family = "base"

    def __init__(self, task: str, hyperparams: dict | None = None,
                 manifest: list[str] | None = None, seed: int | None = None):
        if task not in ("regression", "classification"):
            raise ModelError("unknown task %r" % task)
        self.task = task
        self.hyperparams = dict(hyperparams or {})
        self.manifest = list(manifest) if manifest else None
        self.seed = seed

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.manifest is not None and X.shape[1] != len(self.manifest):
            raise ModelError(
                "input has %d columns but the model was trained on %d (%s...)"
                % (X.shape[1], len(self.manifest), ", ".join(self.manifest[:3])))
        return X

    def predict(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def params_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):  # pragma: no cover
        raise NotImplementedError


def save_model(model: Model, path) -> None:
    envelope = {
        "format_version": FORMAT_VERSION,
        "family": model.family,
        "task": model.task,
        "hyperparameters": model.hyperparams,
        "manifest": model.manifest,
        "seed": model.seed,
        "params": model.params_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(envelope, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            env = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError("corrupted model file %s: %s" % (path, exc))
    if env.get("format_version") != FORMAT_VERSION:
        raise ModelError("unsupported model format version %r"
                         % env.get("format_version"))
    family = env.get("family")
    if family not in _REGISTRY:
        raise ModelError("unknown model family %r" % family)
    cls = _REGISTRY[family]
    return cls.from_params(env["task"], env["hyperparameters"], env["manifest"],
                           env.get("seed"), env["params"])


def require_task(model: Model, task: str) -> None:
    if model.task != task:
        raise ModelError("model is a %s model, pipeline expects %s"
                         % (model.task, task))


class Standardizer:
    """Per-column z-scoring fitted on training data only. Constant columns
    pass through unscaled."""

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)

    @staticmethod
    def fit(X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return Standardizer(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


@register
class StandardizedModel(Model):
    """Wraps a fitted model with the standardizer fitted on its training
    folds, so persisted models carry their own scaling."""

    family = "standardized"

    def __init__(self, inner: Model, standardizer: Standardizer):
        super().__init__(inner.task, inner.hyperparams, inner.manifest, inner.seed)
        self.inner = inner
        self.standardizer = standardizer

    def predict(self, X):
        return self.inner.predict(self.standardizer.transform(np.atleast_2d(X)))

    def __getattr__(self, name):
        # delegate score/probability accessors to the wrapped model
        if name.startswith("_"):
            raise AttributeError(name)
        inner = self.__dict__.get("inner")
        attr = getattr(inner, name)
        if callable(attr) and name in ("predict_proba", "scores", "decision_function",
                                       "predict_scores"):
            std = self.__dict__["standardizer"]
            return lambda X, *a, **k: attr(std.transform(np.atleast_2d(X)), *a, **k)
        return attr

    def params_dict(self) -> dict:
        return {
            "mean": self.standardizer.mean.tolist(),
            "scale": self.standardizer.scale.tolist(),
            "inner_family": self.inner.family,
            "inner": {
                "task": self.inner.task,
                "hyperparameters": self.inner.hyperparams,
                "manifest": self.inner.manifest,
                "seed": self.inner.seed,
                "params": self.inner.params_dict(),
            },
        }

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        inner_cls = _REGISTRY[params["inner_family"]]
        inn = params["inner"]
        inner = inner_cls.from_params(inn["task"], inn["hyperparameters"],
                                      inn["manifest"], inn.get("seed"), inn["params"])
        return cls(inner, Standardizer(np.array(params["mean"]),
                                       np.array(params["scale"])))


def fit_standardized(fit_fn, X, y, **kwargs) -> StandardizedModel:
    std = Standardizer.fit(X)
    return StandardizedModel(fit_fn(std.transform(X), y, **kwargs), std)
