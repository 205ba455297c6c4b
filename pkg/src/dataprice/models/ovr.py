"""One-vs-rest multiclass ensemble over binary scorers."""

from __future__ import annotations

import warnings

import numpy as np

from .base import Model, ModelError, register, _REGISTRY


@register
class ConstantScoreModel(Model):
    """Stands in for a class absent from the training data: always scores
    a large negative value so it never wins the argmax on real inputs."""

    family = "constant_score"
    SCORE = -1e18

    def __init__(self, **kw):
        kw.setdefault("task", "classification")
        super().__init__(**kw)

    def scores(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.SCORE)

    def predict(self, X):
        return np.zeros(np.atleast_2d(X).shape[0], dtype=np.int64)

    def params_dict(self):
        return {}

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        return cls(hyperparams=hyperparams, manifest=manifest, seed=seed)


@register
class OvREnsemble(Model):
    family = "ovr"

    def __init__(self, members, classes, **kw):
        kw.setdefault("task", "classification")
        super().__init__(**kw)
        if len(members) != len(classes):
            raise ModelError("one member per class required")
        self.members = members
        self.classes = list(classes)

    def predict_scores(self, X):
        return np.column_stack([m.scores(X) for m in self.members])

    def predict(self, X):
        # argmax takes the lowest class index on ties
        return np.argmax(self.predict_scores(X), axis=1).astype(np.int64)

    def params_dict(self):
        return {"classes": self.classes,
                "members": [{"family": m.family, "task": m.task,
                             "hyperparameters": m.hyperparams,
                             "manifest": m.manifest, "seed": m.seed,
                             "params": m.params_dict()} for m in self.members]}

    @classmethod
    def from_params(cls, task, hyperparams, manifest, seed, params):
        members = []
        for env in params["members"]:
            mcls = _REGISTRY[env["family"]]
            members.append(mcls.from_params(env["task"], env["hyperparameters"],
                                            env["manifest"], env.get("seed"),
                                            env["params"]))
        return cls(members, params["classes"], hyperparams=hyperparams,
                   manifest=manifest, seed=seed)


def one_vs_rest(fit_fn, X, y, n_classes: int | None = None,
                labels: str = "01", manifest=None) -> OvREnsemble:
    """Fit one binary scorer per class with fit_fn(X, y_binary).

    labels="01" passes {0,1} targets, labels="pm1" passes {-1,+1} (for SVM
    members). A class absent from y gets a constant always-negative member.
    """
    y = np.asarray(y, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    present = set(np.unique(y).tolist())
    if len(present) < 2:
        raise ModelError("one-vs-rest needs at least 2 classes present")
    members = []
    for k in range(n_classes):
        if k not in present:
            warnings.warn("class %d absent from training data; member "
                          "trained as always-negative" % k)
            members.append(ConstantScoreModel(manifest=manifest))
            continue
        yk = (y == k).astype(np.int64)
        if labels == "pm1":
            yk = 2 * yk - 1
        members.append(fit_fn(X, yk))
    return OvREnsemble(members, list(range(n_classes)), manifest=manifest)
