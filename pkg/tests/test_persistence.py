import json

import numpy as np
import pytest

from dataprice.models import (ConstantScoreModel, ModelError, OvREnsemble,
                              fit_cart, fit_forest, fit_gbt, fit_linear,
                              fit_logistic, fit_mlp, fit_standardized,
                              fit_svm, fit_svr, load_model, one_vs_rest,
                              require_task, save_model)


def data(seed=0, n=40, p=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    return X, X @ np.array([1.0, -2.0, 0.5]) + 0.1 * rng.normal(size=n)


class TestSaveLoad:
    def roundtrip(self, model, X, tmp_path, scorer="predict"):
        path = tmp_path / "m.json"
        save_model(model, path)
        back = load_model(path)
        assert np.allclose(getattr(model, scorer)(X), getattr(back, scorer)(X))
        return back

    def test_linear(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_linear(X, y, ridge=0.5), X, tmp_path)

    def test_logistic(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_logistic(X, (y > 0).astype(int), epochs=50), X,
                       tmp_path, "predict_proba")

    def test_mlp(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_mlp(X, y, hidden=(4,), epochs=20, seed=0), X, tmp_path)

    def test_cart(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_cart(X, y, max_depth=4), X, tmp_path)

    def test_svm(self, tmp_path):
        X, y = data()
        yy = np.where(y > 0, 1.0, -1.0)
        self.roundtrip(fit_svm(X, yy, C=1.0, kernel="rbf", gamma=0.3), X,
                       tmp_path, "decision_function")

    def test_svr(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_svr(X, y, kernel="rbf", gamma=0.3, max_iter=500),
                       X, tmp_path)

    def test_forest(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_forest(X, y, n_trees=5, max_depth=3, seed=0), X,
                       tmp_path)

    def test_gbt(self, tmp_path):
        X, y = data()
        self.roundtrip(fit_gbt(X, y, n_rounds=10), X, tmp_path)

    def test_standardized_wrapper(self, tmp_path):
        X, y = data()
        m = fit_standardized(fit_linear, X, y, ridge=1.0)
        back = self.roundtrip(m, X, tmp_path)
        assert back.family == "standardized"

    def test_ovr_nested(self, tmp_path):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 2))
        y = (X[:, 0] > 0).astype(int) + (X[:, 1] > 0).astype(int)
        m = one_vs_rest(lambda Xb, yb: fit_logistic(Xb, yb, epochs=50), X, y)
        self.roundtrip(m, X, tmp_path, "predict_scores")

    def test_corrupted_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ModelError, match="corrupt"):
            load_model(path)

    def test_unknown_version(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"format_version": 99, "family": "linear"}))
        with pytest.raises(ModelError, match="version"):
            load_model(path)

    def test_unknown_family(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_text(json.dumps({"format_version": 1, "family": "catboost"}))
        with pytest.raises(ModelError, match="family"):
            load_model(path)

    def test_manifest_checked_on_predict(self, tmp_path):
        X, y = data()
        m = fit_linear(X, y)
        m.manifest = ["a", "b", "c"]
        with pytest.raises(ModelError, match="columns"):
            m.predict(np.zeros((2, 5)))

    def test_require_task(self):
        X, y = data()
        m = fit_linear(X, y)
        require_task(m, "regression")
        with pytest.raises(ModelError):
            require_task(m, "classification")


class TestOvR:
    def test_argmax_tie_breaks_low(self):
        class Fixed:
            family = "fixed"
            task = "classification"

            def __init__(self, v):
                self.v = v

            def scores(self, X):
                return np.full(np.atleast_2d(X).shape[0], self.v)

        m = OvREnsemble([Fixed(1.0), Fixed(1.0), Fixed(0.0)], [0, 1, 2])
        assert m.predict(np.zeros((3, 2))).tolist() == [0, 0, 0]

    def test_absent_class_constant_member(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 2))
        y = (X[:, 0] > 0).astype(int)  # classes 0 and 1 only
        with pytest.warns(UserWarning, match="absent"):
            m = one_vs_rest(lambda Xb, yb: fit_logistic(Xb, yb, epochs=30),
                            X, y, n_classes=3)
        assert isinstance(m.members[2], ConstantScoreModel)
        assert not np.any(m.predict(X) == 2)

    def test_pm1_labels_for_svm_members(self):
        rng = np.random.default_rng(3)
        X = np.vstack([rng.normal(-2, 0.3, (20, 2)), rng.normal(0, 0.3, (20, 2)),
                       rng.normal(2, 0.3, (20, 2))])
        y = np.array([0] * 20 + [1] * 20 + [2] * 20)
        m = one_vs_rest(lambda Xb, yb: fit_svm(Xb, yb, C=2.0, kernel="rbf",
                                               gamma=1.0, seed=0),
                        X, y, labels="pm1")
        assert np.mean(m.predict(X) == y) > 0.9

    def test_single_class_rejected(self):
        with pytest.raises(ModelError):
            one_vs_rest(lambda Xb, yb: None, np.zeros((5, 1)), np.zeros(5, int))
