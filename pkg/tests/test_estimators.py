"""Scikit-learn estimator wrappers."""

import numpy as np
import pytest
from sklearn.base import clone

from stablebal import (
    DeepGlobalBalancingClassifier,
    DeepLogistic,
    GlobalBalancingClassifier,
    LogisticBaseline,
)


def binary_problem(seed=0, n=80, p=4):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, p))
    logits = X @ np.array([2.0, -2.0, 1.0, 0.0][:p])
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


ESTIMATORS = [
    LogisticBaseline(lambda4=0.01),
    DeepLogistic(max_outer_iters=3),
    GlobalBalancingClassifier(max_outer_iters=3),
    DeepGlobalBalancingClassifier(max_outer_iters=3),
]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
class TestEstimatorContract:
    def test_fit_predict_shapes(self, est):
        X, y = binary_problem()
        est = clone(est)
        fitted = est.fit(X, y)
        assert fitted is est
        proba = est.predict_proba(X)
        assert proba.shape == (X.shape[0], 2)
        assert np.allclose(proba.sum(axis=1), 1.0)
        preds = est.predict(X)
        assert set(np.unique(preds)) <= set(est.classes_)

    def test_get_set_params_round_trip(self, est):
        params = est.get_params()
        rebuilt = type(est)(**params)
        assert rebuilt.get_params() == params

    def test_clone_preserves_params(self, est):
        assert clone(est).get_params() == est.get_params()

    def test_rejects_non_binary_features(self, est):
        X, y = binary_problem()
        X = X.astype(float)
        X[0, 0] = 0.5
        with pytest.raises(ValueError):
            clone(est).fit(X, y)

    def test_rejects_single_class(self, est):
        X, y = binary_problem()
        with pytest.raises(ValueError):
            clone(est).fit(X, np.zeros_like(y))


class TestLabelsAndAttributes:
    def test_non_01_labels_map_back(self):
        X, y = binary_problem(seed=3)
        labels = np.where(y == 1, "pos", "neg")
        est = LogisticBaseline().fit(X, labels)
        preds = est.predict(X)
        assert set(preds) <= {"pos", "neg"}
        # probability column 1 corresponds to classes_[1] ("pos")
        assert est.classes_.tolist() == ["neg", "pos"]

    def test_coef_and_weights_exposed(self):
        X, y = binary_problem(seed=4)
        est = GlobalBalancingClassifier(max_outer_iters=3).fit(X, y)
        assert est.coef_.shape == (X.shape[1],)
        assert est.sample_weight_.shape == (X.shape[0],)
        assert np.all(est.sample_weight_ >= 0)

    def test_learns_signal(self):
        X, y = binary_problem(seed=5, n=400)
        est = LogisticBaseline(lambda4=0.01).fit(X, y)
        assert est.score(X, y) > 0.7

    def test_unfitted_raises(self):
        from sklearn.exceptions import NotFittedError

        X, _ = binary_problem()
        with pytest.raises(NotFittedError):
            LogisticBaseline().predict_proba(X)
