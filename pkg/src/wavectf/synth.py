"""Synthetic wavefields with known ground truth.

* :func:`gen_swell` superposes surface-gravity waves obeying the finite-depth
  dispersion relation, sampled along a straight line of channels.
* :func:`gen_linear_system` draws a trajectory of a planted low-rank linear
  map, for checking DMD against exact answers.
* :func:`gen_pulse_family` advects a Gaussian pulse around a ring at a
  parameter-dependent speed, giving the trajectories of the parametric tasks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .preprocessing import normalize

GRAVITY = 9.81


def dispersion(k, depth, gravity=GRAVITY):
    """Angular frequency of a gravity wave: ``w**2 = g k tanh(k h)``."""
    k = np.asarray(k, dtype=np.float64)
    return np.sqrt(gravity * k * np.tanh(k * depth))


@dataclass(frozen=True)
class SwellMode:
    k: float
    amplitude: float = 1.0
    phase: float | None = None


@dataclass
class SwellConfig:
    n: int = 256
    channel_spacing: float = 9.57
    dt: float = 0.2
    steps: int = 384
    depth: float = 30.0
    gravity: float = GRAVITY
    modes: list = field(default_factory=lambda: [SwellMode(0.1)])
    seed: int = 0

    def __post_init__(self):
        if not self.depth > 0 or not self.gravity > 0:
            raise ValueError("depth and gravity must be positive")
        if not self.modes:
            raise ValueError("at least one mode is required")
        if any(not m.k > 0 for m in self.modes):
            raise ValueError("wavenumbers must be positive")


def gen_swell(cfg, normalized=True):
    """Sample ``sum a cos(k x - w(k) t + phi)`` on an ``(steps, n)`` grid.

    Missing phases are drawn uniformly from the config seed. The field is
    normalized to zero mean and unit variance unless ``normalized=False``.
    """
    rng = np.random.default_rng(cfg.seed)
    x = np.arange(cfg.n) * cfg.channel_spacing
    t = np.arange(cfg.steps) * cfg.dt
    field_ = np.zeros((cfg.steps, cfg.n))
    for mode in cfg.modes:
        omega = float(dispersion(mode.k, cfg.depth, cfg.gravity))
        if omega * cfg.dt >= np.pi:
            raise ValueError(f"mode k={mode.k}: w*dt={omega * cfg.dt:.3f} violates the temporal Nyquist limit")
        phase = rng.uniform(0, 2 * np.pi) if mode.phase is None else mode.phase
        field_ += mode.amplitude * np.cos(mode.k * x[None, :] - omega * t[:, None] + phase)
    if normalized:
        field_, _ = normalize(field_)
    return field_


def random_modes(count, k_min, k_max, seed):
    """Modes with wavenumbers uniform in ``[k_min, k_max]`` and fixed phases."""
    rng = np.random.default_rng(seed)
    ks = rng.uniform(k_min, k_max, count)
    amps = rng.uniform(0.5, 1.5, count)
    phases = rng.uniform(0, 2 * np.pi, count)
    return [SwellMode(float(k), float(a), float(p)) for k, a, p in zip(ks, amps, phases)]


@dataclass
class LinearSystemConfig:
    n: int = 20
    spectrum: tuple = (0.99, 0.98 * np.exp(0.2j), 0.98 * np.exp(-0.2j))
    steps: int = 200
    seed: int = 0

    @property
    def rank(self):
        return len(self.spectrum)

    def __post_init__(self):
        lam = np.asarray(self.spectrum, dtype=complex)
        if np.any(np.abs(lam) > 1 + 1e-12):
            raise ValueError("spectrum must lie in the closed unit disc")
        if not np.allclose(np.sort_complex(lam), np.sort_complex(lam.conj())):
            raise ValueError("spectrum must be closed under conjugation")
        if len(lam) > self.n:
            raise ValueError("rank exceeds dimension")


def _real_block_form(spectrum):
    lam = np.asarray(spectrum, dtype=complex)
    blocks = []
    used = np.zeros(lam.size, dtype=bool)
    for i, z in enumerate(lam):
        if used[i]:
            continue
        used[i] = True
        if abs(z.imag) < 1e-14:
            blocks.append(np.array([[z.real]]))
            continue
        j = next(j for j in range(lam.size) if not used[j] and abs(lam[j] - z.conjugate()) < 1e-12)
        used[j] = True
        a, b = z.real, abs(z.imag)
        blocks.append(np.array([[a, -b], [b, a]]))
    size = sum(b.shape[0] for b in blocks)
    B = np.zeros((size, size))
    at = 0
    for blk in blocks:
        s = blk.shape[0]
        B[at:at + s, at:at + s] = blk
        at += s
    return B


def gen_linear_system(cfg):
    """Trajectory of ``x_{t+1} = A x_t`` with ``A`` of rank ``len(spectrum)``.

    ``A = Q B Q^T`` with ``B`` the real block-diagonal form of the spectrum
    and ``Q`` a random orthonormal basis; ``x_0`` lies in the range of ``Q`` so
    the whole trajectory has exactly that rank.

    Returns
    -------
    X : ndarray (steps, n)
    A : ndarray (n, n)
    """
    rng = np.random.default_rng(cfg.seed)
    B = _real_block_form(cfg.spectrum)
    Q, _ = np.linalg.qr(rng.standard_normal((cfg.n, B.shape[0])))
    A = Q @ B @ Q.T
    z = rng.standard_normal(B.shape[0])
    z /= np.linalg.norm(z)
    X = np.empty((cfg.steps, cfg.n))
    X[0] = Q @ z
    for t in range(1, cfg.steps):
        X[t] = A @ X[t - 1]
    return X, A


@dataclass
class PulseConfig:
    n: int = 256
    speed: float = 0.5
    width: float = 6.0
    steps: int = 384
    origin: float | None = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.speed > 0 or not self.width > 0:
            raise ValueError("speed and width must be positive")


def ring_pulse(x, t, origin, velocity, width, n):
    """Gaussian pulse on a ring of ``n`` sensors, centred at ``origin + velocity*t``."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    centre = origin + velocity * t
    d = np.mod(x - centre + n / 2, n) - n / 2
    return np.exp(-0.5 * (d / width) ** 2)


def check_parametric_order(params):
    if len(params) < 5:
        raise ValueError("need five parameters: three training, interpolation, extrapolation")
    train = params[:3]
    lo, hi = min(train), max(train)
    if not lo < params[3] < hi:
        raise ValueError(f"interpolation parameter {params[3]} not strictly inside ({lo}, {hi})")
    if lo <= params[4] <= hi:
        raise ValueError(f"extrapolation parameter {params[4]} not outside [{lo}, {hi}]")


def gen_pulse(cfg, p=1.0, normalized=True):
    """Single pulse trajectory moving at ``speed * p`` sensors per step."""
    origin = cfg.origin
    if origin is None:
        origin = float(np.random.default_rng(cfg.seed).uniform(0, cfg.n))
    x = np.arange(cfg.n)[None, :]
    t = np.arange(cfg.steps)[:, None]
    traj = ring_pulse(x, t, origin, cfg.speed * p, cfg.width, cfg.n)
    if normalized:
        traj, _ = normalize(traj)
    return traj


def gen_pulse_family(cfg, params, normalized=True):
    """One pulse trajectory per parameter, all starting from the same origin."""
    check_parametric_order(params)
    return [gen_pulse(cfg, p, normalized=normalized) for p in params]


def gen_swell_family(cfg, depths, normalized=True):
    """Swell trajectories sharing modes and phases but differing in water depth."""
    check_parametric_order(depths)
    rng = np.random.default_rng(cfg.seed)
    modes = [m if m.phase is not None else SwellMode(m.k, m.amplitude, rng.uniform(0, 2 * np.pi))
             for m in cfg.modes]
    out = []
    for h in depths:
        sub = SwellConfig(n=cfg.n, channel_spacing=cfg.channel_spacing, dt=cfg.dt, steps=cfg.steps,
                          depth=h, gravity=cfg.gravity, modes=modes, seed=cfg.seed)
        out.append(gen_swell(sub, normalized=normalized))
    return out
