"""Parallel leaky echo-state network with a ridge readout.

The spatial channels are cut into ``g`` contiguous groups. Group ``i`` owns
its channels and additionally sees ``L`` neighbours on either side (wrapping
around the ends); it predicts only the channels it owns. All groups step in
lockstep so that, when running autonomously, each one reads its neighbours'
latest predictions.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigs
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_trajectories
from .base import ForecasterMixin

log = logging.getLogger(__name__)

DENSE_EIG_MAX = 512
EIG_TOL = 1e-12
# several eigenvalues are requested because the spectrum of a random sparse
# matrix crowds the edge of its disc; asking for one lets Arnoldi settle on a
# near-maximal pair and miss the true radius by ~1e-3
ARNOLDI_K = 6
ARNOLDI_NCV = 60


def spectral_radius(W):
    """Largest eigenvalue modulus of a square (sparse or dense) matrix."""
    size = W.shape[0]
    if size <= DENSE_EIG_MAX:
        dense = W.toarray() if sp.issparse(W) else np.asarray(W)
        return float(np.abs(np.linalg.eigvals(dense)).max())
    # Arnoldi rather than plain power iteration: dominant eigenvalues of a
    # random real matrix are usually a complex pair, which plain iteration
    # cannot resolve. A fixed start vector keeps the result reproducible.
    vals = eigs(W, k=ARNOLDI_K, which="LM", v0=np.ones(size), tol=EIG_TOL,
                ncv=min(size - 1, ARNOLDI_NCV), return_eigenvectors=False)
    return float(np.abs(vals).max())


def odd_square(H):
    """Square every odd-indexed (0-based) reservoir coordinate."""
    F = np.array(H, dtype=np.float64, copy=True)
    F[..., 1::2] **= 2
    return F


def ridge_readout(features, targets, beta):
    """Solve ``min_W sum ||W f_i - u_i||^2 + beta ||W||^2``; returns ``W``.

    With fewer samples than features the equivalent dual system
    ``(F F^T + beta I)`` is solved instead of ``(F^T F + beta I)``.
    """
    F = np.asarray(features, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    dual = F.shape[0] < F.shape[1]
    gram = F @ F.T if dual else F.T @ F
    gram[np.diag_indices_from(gram)] += beta
    try:
        sol = scipy.linalg.solve(gram, Y if dual else F.T @ Y, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise np.linalg.LinAlgError(f"ridge normal equations are singular (beta={beta})") from exc
    if dual:
        sol = F.T @ sol
    if not np.isfinite(sol).all():
        raise np.linalg.LinAlgError(f"ridge normal equations are singular (beta={beta})")
    return sol.T


def channel_groups(n, g, L):
    """Owned and observed channel indices for each of ``g`` groups.

    The last group absorbs the remainder when ``g`` does not divide ``n``.
    Each group also observes ``L`` neighbours on either side, wrapping
    circularly, with no channel listed twice.
    """
    if not 1 <= g <= n:
        raise ValueError(f"g={g} groups cannot partition {n} channels")
    width = n // g
    groups = []
    for i in range(g):
        start = i * width
        end = n if i == g - 1 else start + width
        owned = np.arange(start, end)
        seen = np.arange(start - L, end + L) % n
        # when the overlap wraps past the whole ring, keep each channel once
        _, first = np.unique(seen, return_index=True)
        seen = seen[np.sort(first)]
        groups.append((owned, seen))
    return groups


class ESN(ForecasterMixin, BaseEstimator):
    """Parallel echo-state forecaster.

    Hyperparameter names follow the search-space tables: ``N_h`` reservoir
    size, ``alpha`` leak rate, ``sigma`` input scale, ``sigma_b`` bias,
    ``rho`` spectral radius, ``beta`` ridge penalty, ``g`` group count,
    ``L`` locality overlap, ``n_spin`` discarded transient.
    """

    def __init__(self, N_h=500, alpha=1.0, sigma=0.1, sigma_b=0.0, rho=0.9, density=0.02,
                 beta=1e-6, n_spin=100, g=1, L=1, seed=0):
        self.N_h = N_h
        self.alpha = alpha
        self.sigma = sigma
        self.sigma_b = sigma_b
        self.rho = rho
        self.density = density
        self.beta = beta
        self.n_spin = n_spin
        self.g = g
        self.L = L
        self.seed = seed

    def warmup_rows(self):
        return int(self.n_spin) + 2

    def _validate_params(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if int(self.N_h) < 1:
            raise ValueError(f"N_h must be >= 1, got {self.N_h}")
        if not 0 < self.density <= 1:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.beta < 0 or self.sigma < 0 or int(self.L) < 0 or int(self.n_spin) < 0:
            raise ValueError("beta, sigma, L and n_spin must be nonnegative")

    def _build(self, n):
        N_h, g, L = int(self.N_h), int(self.g), int(self.L)
        groups = channel_groups(n, g, L)
        recurrent, inputs = [], []
        for i, (_owned, seen) in enumerate(groups):
            rng = np.random.default_rng([int(self.seed), i])
            W = sp.random(N_h, N_h, density=self.density, format="csr", random_state=rng,
                          data_rvs=lambda k: rng.uniform(-1.0, 1.0, k))
            radius = spectral_radius(W)
            if radius <= 0:
                raise ValueError("reservoir matrix is nilpotent; raise N_h or density")
            recurrent.append((W * (self.rho / radius)).tocsr())
            W_in = rng.uniform(-self.sigma, self.sigma, size=(N_h, seen.size))
            # fold the channel selection into a sparse (N_h, n) input map
            inputs.append(sp.csr_matrix((W_in.ravel(), (np.repeat(np.arange(N_h), seen.size),
                                                        np.tile(seen, N_h))), shape=(N_h, n)))
        self.groups_ = groups
        self.reservoirs_ = recurrent
        self._W_hh = sp.block_diag(recurrent, format="csr")
        self._W_in = sp.vstack(inputs, format="csr")

    def _step(self, h, drive):
        pre = self._W_hh @ h + drive + self.sigma_b
        return (1.0 - self.alpha) * h + self.alpha * np.tanh(pre)

    def _group_slice(self, i):
        N_h = int(self.N_h)
        return slice(i * N_h, (i + 1) * N_h)

    def _group_states(self, i, X):
        # under teacher forcing the groups do not interact, so each can be
        # driven on its own and only one (T+1, N_h) block is held at a time
        W = self.reservoirs_[i]
        drive = (self._W_in[self._group_slice(i)] @ X.T).T
        H = np.zeros((X.shape[0] + 1, W.shape[0]))
        for t in range(X.shape[0]):
            pre = W @ H[t] + drive[t] + self.sigma_b
            H[t + 1] = (1.0 - self.alpha) * H[t] + self.alpha * np.tanh(pre)
        return H

    def reservoir_states(self, X):
        """Teacher-forced states ``h_0 .. h_T`` for a ``(T, n)`` input, from ``h_0 = 0``."""
        X = np.asarray(X, dtype=np.float64)
        return np.hstack([self._group_states(i, X) for i in range(len(self.groups_))])

    def _final_state(self, X):
        return np.concatenate([self._group_states(i, X)[-1] for i in range(len(self.groups_))])

    def _readout(self, H):
        F = odd_square(H)
        out = np.empty(F.shape[:-1] + (self.n_features_in_,))
        for i, (owned, _seen) in enumerate(self.groups_):
            out[..., owned] = F[..., self._group_slice(i)] @ self.readouts_[i].T
        return out

    def fit(self, X, y=None):
        self._validate_params()
        mats = check_trajectories(X)
        n = mats[0].shape[1]
        shortest = min(m.shape[0] for m in mats)
        if shortest < 3:
            raise ValueError(f"trajectories need at least 3 rows, got {shortest}")
        spin = max(int(self.n_spin), 1)
        if spin > shortest // 2:
            # short records would otherwise be discarded entirely as transient
            spin = max(shortest // 2, 1)
            log.info("spin-up shortened from %d to %d rows for %d-row data", self.n_spin, spin, shortest)
        self.spin_ = spin
        self.n_features_in_ = n
        self._build(n)
        readouts, last = [], []
        for i, (owned, _seen) in enumerate(self.groups_):
            feats, targets = [], []
            for m in mats:
                # h_t has seen u_0 .. u_{t-1}, so g(h_t) is regressed on u_t
                H = self._group_states(i, m)
                feats.append(odd_square(H[spin:m.shape[0]]))
                targets.append(m[spin:, owned])
            readouts.append(ridge_readout(np.vstack(feats), np.vstack(targets), self.beta))
            last.append(H[-1])
        self.readouts_ = readouts
        self.last_state_ = np.concatenate(last)
        return self

    def _run(self, h, steps):
        out = np.empty((steps, self.n_features_in_))
        for t in range(steps):
            u = self._readout(h)
            out[t] = u
            h = self._step(h, self._W_in @ u)
        return out

    def predict(self, n_steps, context=None):
        """Close the loop and run autonomously for ``n_steps`` rows."""
        check_is_fitted(self, "readouts_")
        steps = self._check_steps(n_steps)
        if context is None:
            h = self.last_state_
        else:
            C = self._check_width(context, "context")
            h = self._final_state(C)
        return self._run(h.copy(), steps)

    def transform(self, X):
        """Teacher-forced one-step readouts aligned to the rows of ``X``.

        The first ``spin_`` rows (the spin-up used in fitting) have no trained
        prediction and are copied from the input.
        """
        check_is_fitted(self, "readouts_")
        X = self._check_width(X)
        out = np.empty_like(X)
        for i, (owned, _seen) in enumerate(self.groups_):
            H = self._group_states(i, X)[:X.shape[0]]
            out[:, owned] = odd_square(H) @ self.readouts_[i].T
        spin = min(self.spin_, X.shape[0])
        out[:spin] = X[:spin]
        return out
