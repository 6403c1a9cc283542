"""Estimator protocol shared by the reference forecasters, plus the naive ones.

Every forecaster follows the scikit-learn conventions (constructor only
stores hyperparameters, ``fit`` returns ``self``, learned state ends in an
underscore) with three verbs:

``fit(X)``
    Learn from one ``(timesteps, channels)`` matrix or a list of them.
``predict(n_steps, context=None)``
    Forecast ``n_steps`` rows after the end of the (last) training
    trajectory, or after ``context`` when a burn-in window is given.
``transform(X)``
    Reconstruct (denoise) ``X`` with the fitted model.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_trajectories


class ForecasterMixin:
    # rows at the start of a training window the model needs before it can learn
    def warmup_rows(self):
        return 0

    def _check_steps(self, n_steps):
        n_steps = int(n_steps)
        if n_steps < 0:
            raise ValueError(f"n_steps must be nonnegative, got {n_steps}")
        return n_steps

    def _check_width(self, X, name="X"):
        X = check_matrix(X, name=name)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"{name} has {X.shape[1]} channels, model was fit on {self.n_features_in_}")
        return X

    def fit_predict(self, X, n_steps, context=None):
        return self.fit(X).predict(n_steps, context=context)


class ZerosForecaster(ForecasterMixin, BaseEstimator):
    """Predicts zeros everywhere."""

    def fit(self, X, y=None):
        self.n_features_in_ = check_trajectories(X)[0].shape[1]
        return self

    def predict(self, n_steps, context=None):
        check_is_fitted(self, "n_features_in_")
        return np.zeros((self._check_steps(n_steps), self.n_features_in_))

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return np.zeros_like(self._check_width(X))


class AverageForecaster(ForecasterMixin, BaseEstimator):
    """Predicts the per-channel mean of the training data at every step."""

    def fit(self, X, y=None):
        mats = check_trajectories(X)
        stacked = np.vstack(mats)
        self.n_features_in_ = stacked.shape[1]
        self.mean_ = stacked.mean(axis=0)
        return self

    def predict(self, n_steps, context=None):
        check_is_fitted(self, "mean_")
        return np.tile(self.mean_, (self._check_steps(n_steps), 1))

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = self._check_width(X)
        return np.tile(self.mean_, (X.shape[0], 1))
