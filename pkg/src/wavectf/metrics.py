"""Short-term, spectral long-term, and composite scores for a submission."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _jsonfmt
from .io import load_any
from .tasks import LT, RECONSTRUCTION, SCORE_IDS, TASKS

log = logging.getLogger(__name__)

LOG_POWER_FLOOR = 1e-30
SCORE_MIN, SCORE_MAX = -100.0, 100.0


class ScoringError(ValueError):
    pass


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ScoringError(f"shape mismatch: prediction {pred.shape} vs truth {truth.shape}")
    if pred.ndim != 2:
        raise ScoringError(f"expected 2-D matrices, got {pred.ndim}-D")
    return pred, truth


def short_term_error(pred, truth, k):
    """Relative Frobenius error over the first ``k`` rows."""
    pred, truth = _pair(pred, truth)
    if not 1 <= k <= truth.shape[0]:
        raise ScoringError(f"k={k} outside [1, {truth.shape[0]}]")
    ref = np.linalg.norm(truth[:k])
    if ref == 0:
        raise ScoringError("truth window has zero norm")
    return float(np.linalg.norm(truth[:k] - pred[:k]) / ref)


def power_spectrum(mat, k, kmax=100):
    """Log power of the spatial DFT of the last ``k`` rows.

    The zero wavenumber is shifted to column ``n // 2`` and the ``2*kmax + 1``
    bins centred on it are kept. Entries are ``ln(max(|c|**2, 1e-30))``; an
    all-zero block maps to an all-zero spectrum.
    """
    X = np.asarray(mat, dtype=np.float64)
    if X.ndim != 2:
        raise ScoringError(f"expected a 2-D matrix, got {X.ndim}-D")
    rows, n = X.shape
    if not 1 <= k <= rows:
        raise ScoringError(f"k={k} outside [1, {rows}]")
    if n < 2 * kmax + 2:
        raise ScoringError(f"{n} columns is too few for kmax={kmax} (need {2 * kmax + 2})")
    block = X[rows - k:]
    if not block.any():
        return np.zeros((k, 2 * kmax + 1))
    coef = np.fft.fftshift(np.fft.fft(block, axis=1), axes=1)
    centre = n // 2
    window = coef[:, centre - kmax:centre + kmax + 1]
    return np.log(np.maximum(np.abs(window) ** 2, LOG_POWER_FLOOR))


def long_term_error(pred, truth, k, kmax=100):
    """Relative Frobenius distance between the two log-power spectra."""
    pred, truth = _pair(pred, truth)
    p_truth = power_spectrum(truth, k, kmax)
    p_pred = power_spectrum(pred, k, kmax)
    ref = np.linalg.norm(p_truth)
    if ref == 0:
        raise ScoringError("truth spectrum has zero norm")
    return float(np.linalg.norm(p_truth - p_pred) / ref)


def to_score(S):
    """Map an error to the [-100, 100] score scale; non-finite errors fail."""
    if S is None or not math.isfinite(S):
        return SCORE_MIN
    return float(min(SCORE_MAX, max(SCORE_MIN, 100.0 * (1.0 - S))))


def task_error(task, pred, truth, config):
    if task.task_kind == RECONSTRUCTION:
        return short_term_error(pred, truth, np.asarray(truth).shape[0])
    if task.metric_kind == LT:
        return long_term_error(pred, truth, config.k_split, config.kmax)
    return short_term_error(pred, truth, config.k_split)


@dataclass
class ScoreReport:
    dataset: str
    method: str
    raw: dict
    scores: dict
    failures: dict = field(default_factory=dict)

    @property
    def composite(self):
        return float(sum(self.scores[s] for s in SCORE_IDS) / len(SCORE_IDS))

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "method": self.method,
            "composite": self.composite,
            "scores": {s: self.scores[s] for s in SCORE_IDS},
            "raw": {s: self.raw.get(s) for s in SCORE_IDS},
            "failures": {s: self.failures[s] for s in SCORE_IDS if s in self.failures},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            dataset=d["dataset"],
            method=d["method"],
            raw={s: (None if d["raw"].get(s) is None else float(d["raw"][s])) for s in SCORE_IDS},
            scores={s: float(d["scores"][s]) for s in SCORE_IDS},
            failures=dict(d.get("failures", {})),
        )

    def to_json(self, indent=2):
        return _jsonfmt.dumps(self.to_dict(), indent=indent)


def _load_prediction(value):
    if value is None:
        raise ScoringError("prediction missing")
    if isinstance(value, np.ndarray):
        arr = value
    else:
        arr = load_any(value)
    arr = np.asarray(arr, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ScoringError("prediction contains NaN or Inf")
    return arr


def evaluate_submission(bundle, predictions, dataset=None, method="unnamed", workers=1):
    """Score every task of a submission against a referee bundle.

    Parameters
    ----------
    bundle : Bundle
        Must hold the test matrices.
    predictions : mapping
        ``X1pred`` .. ``X9pred`` to an array or a file path. Missing or
        unreadable entries, wrong shapes and non-finite values all score -100
        for the affected tasks; the reason is kept in ``failures``.
    """
    config = bundle.config
    loaded, load_errors = {}, {}
    for task in TASKS:
        key = task.pred_key
        if key in loaded or key in load_errors:
            continue
        try:
            loaded[key] = _load_prediction(predictions.get(key))
        except (OSError, ValueError) as exc:
            load_errors[key] = f"{key}: {exc}"

    def score_one(task):
        if task.pred_key in load_errors:
            return task.score_id, None, load_errors[task.pred_key]
        try:
            truth = bundle.test(task.truth_key)
            S = task_error(task, loaded[task.pred_key], truth, config)
        except ScoringError as exc:
            return task.score_id, None, f"{task.pred_key}: {exc}"
        if not math.isfinite(S):
            return task.score_id, None, f"{task.pred_key}: non-finite error"
        return task.score_id, S, None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score_one, TASKS))
    else:
        results = [score_one(t) for t in TASKS]

    raw, scores, failures = {}, {}, {}
    for score_id, S, reason in results:
        raw[score_id] = S
        scores[score_id] = to_score(S)
        if reason is not None:
            failures[score_id] = reason
            log.info("%s scored %.0f: %s", score_id, SCORE_MIN, reason)
    return ScoreReport(dataset=dataset or config.name, method=method, raw=raw, scores=scores, failures=failures)
