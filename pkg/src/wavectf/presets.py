"""Named desk-scale datasets with synthetic sources."""
from __future__ import annotations

from .preprocessing import NoiseSpec, derive_seed
from .splits import Bundle, desk_config, make_splits
from .synth import PulseConfig, SwellConfig, gen_pulse, gen_pulse_family, gen_swell, gen_swell_family, random_modes

DESK_M = 64
DESK_N = 256
DESK_ROWS = 6 * DESK_M


def _config(name, dt, seed):
    cfg = desk_config(name, n=DESK_N, m=DESK_M, M=DESK_M, dt=dt)
    cfg.noise_low = NoiseSpec(0.1, derive_seed(seed, "noise_low"))
    cfg.noise_high = NoiseSpec(1.0, derive_seed(seed, "noise_high"))
    return cfg


def swell_small(seed=0):
    cfg = _config("swell-small", 0.2, seed)
    swell = SwellConfig(n=DESK_N, channel_spacing=9.57, dt=cfg.dt, steps=DESK_ROWS, depth=30.0,
                        modes=random_modes(6, 0.02, 0.2, derive_seed(seed, "modes")), seed=seed)
    source = gen_swell(swell)
    depths = [8.0, 15.0, 40.0, 25.0, 80.0]
    family = gen_swell_family(swell, depths)
    hidden = {"parameter": "depth", "train": depths[:3], "interpolation": depths[3], "extrapolation": depths[4]}
    return Bundle(cfg, make_splits(source, cfg, family), hidden=hidden)


def pulse_small(seed=0):
    cfg = _config("pulse-small", 1.0, seed)
    pulse = PulseConfig(n=DESK_N, speed=0.5, width=6.0, steps=DESK_ROWS, origin=None, seed=seed)
    source = gen_pulse(pulse, 1.0)
    speeds = [0.6, 0.8, 1.2, 1.0, 1.6]
    family = gen_pulse_family(pulse, speeds)
    hidden = {"parameter": "speed", "train": speeds[:3], "interpolation": speeds[3], "extrapolation": speeds[4]}
    return Bundle(cfg, make_splits(source, cfg, family), hidden=hidden)


PRESETS = {
    "swell-small": swell_small,
    "pulse-small": pulse_small,
}


def build_preset(name, seed=0):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(seed)
