"""Benchmark harness for spatio-temporal wavefield forecasting.

Twelve scored tasks (forecasting, noisy reconstruction, limited data,
parametric generalization) are cut from a trajectory, baselines produce
predictions, and an independent referee scores them against withheld test
matrices.
"""
from .io import read_matrix, write_matrix
from .metrics import ScoreReport, evaluate_submission, long_term_error, short_term_error, to_score
from .splits import Bundle, DatasetConfig, make_splits
from .tasks import SCORE_IDS, TASKS

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "DatasetConfig",
    "SCORE_IDS",
    "ScoreReport",
    "TASKS",
    "evaluate_submission",
    "long_term_error",
    "make_splits",
    "read_matrix",
    "short_term_error",
    "to_score",
    "write_matrix",
]
