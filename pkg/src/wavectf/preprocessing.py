"""Per-event normalization and seeded measurement noise."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DegenerateInputError, check_matrix


@dataclass(frozen=True)
class NormStats:
    """Scalar mean and population std of one event matrix."""

    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"std must be positive, got {self.std}")


def normalize(mat):
    """Shift and scale ``mat`` to zero mean and unit population variance.

    Statistics are taken over all entries jointly, so relative channel
    amplitudes survive.

    Returns
    -------
    normalized : ndarray
    stats : NormStats
        Enough to undo the transform with :func:`denormalize`.
    """
    X = check_matrix(mat)
    mean = float(X.mean())
    std = float(X.std())
    if std == 0.0 or not np.isfinite(std):
        raise DegenerateInputError("cannot normalize a constant matrix")
    out = (X - mean) / std
    return out, NormStats(mean=mean, std=std)


def denormalize(mat, stats):
    return np.asarray(mat, dtype=np.float64) * stats.std + stats.mean


class EventNormalizer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`normalize` for use in pipelines."""

    def fit(self, X, y=None):
        _, stats = normalize(X)
        self.mean_ = stats.mean
        self.std_ = stats.std
        self.n_features_in_ = check_matrix(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "std_")
        return (check_matrix(X) - self.mean_) / self.std_

    def inverse_transform(self, X):
        check_is_fitted(self, "std_")
        return denormalize(X, NormStats(self.mean_, self.std_))


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise level relative to the signal's std, plus its seed."""

    sigma_rel: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_rel >= 0:
            raise ValueError(f"sigma_rel must be nonnegative, got {self.sigma_rel}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def add_noise(mat, spec):
    """Return ``mat`` plus i.i.d. N(0, (sigma_rel * std(mat))**2) noise."""
    X = check_matrix(mat)
    if spec.sigma_rel == 0:
        return X.copy()
    rng = np.random.default_rng(int(spec.seed))
    scale = spec.sigma_rel * float(X.std())
    return X + scale * rng.standard_normal(X.shape)


def derive_seed(base_seed, label):
    """Stable 64-bit seed for a named artifact, independent of call order."""
    digest = hashlib.sha256(f"{int(base_seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
