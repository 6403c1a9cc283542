from .base import AverageForecaster, ZerosForecaster
from .dmd import DMD, RankTruncationWarning, delay_embed
from .esn import ESN, ridge_readout, spectral_radius
from .runner import METHODS, make_estimator, run_baseline, write_submission

__all__ = [
    "AverageForecaster",
    "DMD",
    "ESN",
    "METHODS",
    "RankTruncationWarning",
    "ZerosForecaster",
    "delay_embed",
    "make_estimator",
    "ridge_readout",
    "run_baseline",
    "spectral_radius",
    "write_submission",
]
