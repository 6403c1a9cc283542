"""Exact DMD and its time-delay (higher-order) variant."""
from __future__ import annotations

import logging
import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import DegenerateInputError, check_trajectories
from .base import ForecasterMixin

log = logging.getLogger(__name__)

RANK_RTOL = 1e-12


class RankTruncationWarning(UserWarning):
    pass


def delay_embed(X, delay):
    """Stack ``delay + 1`` consecutive rows into one column per time step.

    Column ``j`` of the result is ``[x_j; x_{j+1}; ...; x_{j+delay}]`` for a
    ``(T, n)`` input, giving a ``(n * (delay + 1), T - delay)`` matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    T, n = X.shape
    if T < delay + 1:
        raise ValueError(f"{T} rows cannot be embedded with delay {delay}")
    cols = T - delay
    if delay == 0:
        return X.T.copy()
    return np.vstack([X[i:i + cols].T for i in range(delay + 1)])


def delay_unembed(Z, n, delay):
    """Inverse of :func:`delay_embed` for a consistent column sequence."""
    head = Z[:, 0].reshape(delay + 1, n)
    tail = Z[n * delay:, 1:].T
    return np.vstack([head, tail])


class DMD(ForecasterMixin, BaseEstimator):
    """Dynamic mode decomposition forecaster.

    ``delay=0`` is exact DMD; ``delay=d > 0`` first builds the Hankel
    embedding of ``d + 1`` consecutive snapshots (HODMD).

    Parameters
    ----------
    rank : int
        SVD truncation. Singular values below ``1e-12 * s_max`` are always
        dropped (with a :class:`RankTruncationWarning`), so the fitted
        ``rank_`` may be smaller.
    delay : int
        Embedding depth.

    Attributes
    ----------
    eigenvalues_ : complex ndarray (rank_,)
    modes_ : complex ndarray (n * (delay + 1), rank_)
    amplitudes_ : complex ndarray (rank_,)
        Least-squares fit of the modes to the first embedded snapshot of the
        last training trajectory.
    """

    def __init__(self, rank=10, delay=0):
        self.rank = rank
        self.delay = delay

    def warmup_rows(self):
        return int(self.delay) + 2

    def fit(self, X, y=None):
        rank, delay = int(self.rank), int(self.delay)
        if rank < 1:
            raise ValueError(f"rank must be >= 1, got {rank}")
        if delay < 0:
            raise ValueError(f"delay must be >= 0, got {delay}")
        mats = check_trajectories(X)
        for i, m in enumerate(mats):
            if m.shape[0] <= delay + 1:
                raise ValueError(f"trajectory {i}: {m.shape[0]} rows, need more than delay+1={delay + 1}")
        embedded = [delay_embed(m, delay) for m in mats]
        # snapshot pairs never straddle two trajectories
        X0 = np.hstack([Z[:, :-1] for Z in embedded])
        X1 = np.hstack([Z[:, 1:] for Z in embedded])

        U, s, Vh = np.linalg.svd(X0, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            raise DegenerateInputError("snapshot matrix is identically zero")
        numerical = int(np.sum(s > RANK_RTOL * s[0]))
        r = min(rank, s.size)
        if numerical < r:
            warnings.warn(
                f"rank {rank} exceeds numerical rank {numerical}; truncating",
                RankTruncationWarning,
                stacklevel=2,
            )
            r = numerical
        U, s, V = U[:, :r], s[:r], Vh[:r].conj().T

        X1V_Sinv = (X1 @ V) / s
        Atilde = U.conj().T @ X1V_Sinv
        eigvals, W = np.linalg.eig(Atilde)
        modes = X1V_Sinv @ W

        last = embedded[-1]
        self.n_features_in_ = mats[0].shape[1]
        self.rank_ = r
        self.eigenvalues_ = eigvals
        self.modes_ = modes
        self.singular_values_ = s
        self.amplitudes_ = np.linalg.lstsq(modes, last[:, 0], rcond=None)[0]
        self.n_snapshots_ = last.shape[1]
        return self

    def _evolve(self, b, times):
        n, d = self.n_features_in_, int(self.delay)
        powers = self.eigenvalues_[None, :] ** np.asarray(times, dtype=np.float64)[:, None]
        newest = self.modes_[n * d:]
        return ((powers * b) @ newest.T).real

    def predict(self, n_steps, context=None):
        """Forecast ``n_steps`` rows of ``Re(Phi diag(lambda^t) b)``."""
        check_is_fitted(self, "eigenvalues_")
        steps = self._check_steps(n_steps)
        t = np.arange(1, steps + 1)
        if context is None:
            return self._evolve(self.amplitudes_, self.n_snapshots_ - 1 + t)
        C = self._check_width(context, "context")
        Z = delay_embed(C, int(self.delay))
        b = np.linalg.lstsq(self.modes_, Z[:, -1], rcond=None)[0]
        return self._evolve(b, t)

    def transform(self, X):
        """Reconstruct ``X`` from the modes, seeded by its first snapshot."""
        check_is_fitted(self, "eigenvalues_")
        X = self._check_width(X)
        d = int(self.delay)
        Z = delay_embed(X, d)
        b = np.linalg.lstsq(self.modes_, Z[:, 0], rcond=None)[0]
        powers = self.eigenvalues_[None, :] ** np.arange(Z.shape[1], dtype=np.float64)[:, None]
        Zhat = (self.modes_ @ (powers * b).T).real
        return delay_unembed(Zhat, self.n_features_in_, d)

    def one_step(self, X):
        """Apply the fitted rank-r operator to each row of ``X`` (exact DMD only)."""
        check_is_fitted(self, "eigenvalues_")
        if int(self.delay) != 0:
            raise ValueError("one_step is defined for delay=0")
        X = self._check_width(X)
        b = np.linalg.lstsq(self.modes_, X.T.astype(complex), rcond=None)[0]
        return (self.modes_ @ (self.eigenvalues_[:, None] * b)).real.T
