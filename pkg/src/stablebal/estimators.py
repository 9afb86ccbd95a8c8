"""Scikit-learn compatible estimator wrappers.

Thin classifiers around the functional fitters so the models compose with
pipelines, grid search, and the usual get_params/set_params machinery.
Features must be binary 0/1; outcomes binary.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dataset import BinaryDataset
from .model import HyperParams, fit_dgbr, fit_dlr, fit_gbr, fit_lr, predict_proba

__all__ = [
    "LogisticBaseline",
    "DeepLogistic",
    "GlobalBalancingClassifier",
    "DeepGlobalBalancingClassifier",
]


class _BalancedClassifierBase(BaseEstimator, ClassifierMixin):
    """Shared fit/predict plumbing; subclasses pick the fitter."""

    def _hyper(self) -> HyperParams:
        raise NotImplementedError

    def _fitter(self):
        raise NotImplementedError

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if not np.all(np.isin(X, (0, 1))):
            raise ValueError("features must be binary 0/1")
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError("need exactly two outcome classes")
        y01 = (y == self.classes_[1]).astype(np.int8)
        d = BinaryDataset(X.astype(np.int8), y01)
        self.model_, self.trace_ = self._fitter()(d, self._hyper())
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        p1 = predict_proba(self.model_, X)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.predict_proba(X)[:, 1] >= 0.5).astype(int)]

    @property
    def coef_(self):
        check_is_fitted(self, "model_")
        return self.model_.beta

    @property
    def sample_weight_(self):
        check_is_fitted(self, "model_")
        return self.model_.weights.w


class LogisticBaseline(_BalancedClassifierBase):
    """Elastic-net logistic regression with uniform sample weights."""

    def __init__(self, lambda4=0.0, lambda5=0.0):
        self.lambda4 = lambda4
        self.lambda5 = lambda5

    def _hyper(self):
        return None

    def _fitter(self):
        return lambda d, _: fit_lr(d, self.lambda4, self.lambda5)


class _HyperParamClassifier(_BalancedClassifierBase):
    def __init__(self, lambda1=1.0, lambda2=1.0, lambda3=0.0, lambda4=0.01,
                 lambda5=0.001, lambda6=0.0, lambda7=0.001, max_outer_iters=50,
                 tol=1e-6, step_w=0.05, step_theta=0.05, freeze_w_after=None,
                 layer_sizes=None, seed=0):
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.lambda3 = lambda3
        self.lambda4 = lambda4
        self.lambda5 = lambda5
        self.lambda6 = lambda6
        self.lambda7 = lambda7
        self.max_outer_iters = max_outer_iters
        self.tol = tol
        self.step_w = step_w
        self.step_theta = step_theta
        self.freeze_w_after = freeze_w_after
        self.layer_sizes = layer_sizes
        self.seed = seed

    def _hyper(self):
        return HyperParams(
            lambda1=self.lambda1, lambda2=self.lambda2, lambda3=self.lambda3,
            lambda4=self.lambda4, lambda5=self.lambda5, lambda6=self.lambda6,
            lambda7=self.lambda7, max_outer_iters=self.max_outer_iters,
            tol=self.tol, step_w=self.step_w, step_theta=self.step_theta,
            freeze_w_after=self.freeze_w_after,
            layer_sizes=tuple(self.layer_sizes) if self.layer_sizes else None,
            seed=self.seed,
        )


class DeepLogistic(_HyperParamClassifier):
    """Auto-encoder embedding plus logistic regression, uniform weights."""

    def _fitter(self):
        return fit_dlr


class GlobalBalancingClassifier(_HyperParamClassifier):
    """Jointly learned balancing weights and logistic coefficients."""

    def _fitter(self):
        return fit_gbr


class DeepGlobalBalancingClassifier(_HyperParamClassifier):
    """Balancing weights, auto-encoder embedding, and coefficients jointly."""

    def _fitter(self):
        return fit_dgbr
