"""Random-search hyperparameter tuning with successive halving.

Each trial samples one configuration. Trials are trained on the tuning
partition of the task's public data and scored on the validation partition
with the task's own metric; the withheld test matrices are never reachable
because the tuner only ever holds a :class:`~wavectf.splits.TrainView`.

With ``rungs > 1`` every surviving trial is retrained at each rung on a
growing share of its training rows (``keep_fraction ** (rungs - 1 - j)`` at
rung ``j``) and only the best ``keep_fraction`` move on. Promotion order is
``(score desc, trial_id asc)`` so results do not depend on completion order.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from sklearn.base import clone

from . import _jsonfmt
from .metrics import ScoringError, long_term_error, short_term_error, to_score
from .splits import Bundle, make_tuning_split
from .tasks import LT, RECONSTRUCTION

log = logging.getLogger(__name__)

KINDS = ("uniform", "loguniform", "randint", "choice")


@dataclass(frozen=True)
class ParamDist:
    """One searchable hyperparameter.

    ``randint`` draws integers from ``[low, high)`` (upper bound excluded).
    """

    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    options: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "choice":
            if not self.options:
                raise ValueError(f"{self.name}: choice needs at least one option")
            return
        if self.low is None or self.high is None or not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError(f"{self.name}: bounds must be finite")
        if self.kind == "loguniform" and not self.low > 0:
            raise ValueError(f"{self.name}: loguniform bounds must be positive")
        if self.kind == "randint" and not int(self.high) > int(self.low):
            raise ValueError(f"{self.name}: randint needs high > low")
        if self.kind != "randint" and not self.high >= self.low:
            raise ValueError(f"{self.name}: high < low")

    def draw(self, rng):
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "loguniform":
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        if self.kind == "randint":
            return int(rng.integers(int(self.low), int(self.high)))
        value = self.options[int(rng.integers(len(self.options)))]
        return value.item() if isinstance(value, np.generic) else value


@dataclass
class HyperParamSpace:
    params: list

    @classmethod
    def from_dict(cls, d):
        """Build from ``{name: {type, min, max}}`` or ``{name: {type: choice, options}}``."""
        params = []
        for name, spec in d.items():
            kind = str(spec["type"]).replace("_", "").lower()
            if kind == "choice":
                params.append(ParamDist(name, kind, options=tuple(spec["options"])))
            else:
                params.append(ParamDist(name, kind, low=float(spec["min"]), high=float(spec["max"])))
        return cls(params)

    @classmethod
    def from_yaml(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    @classmethod
    def builtin(cls, name):
        """Search space shipped with the package (``hodmd`` or ``esn``)."""
        text = resources.files("wavectf.spaces").joinpath(f"{name}.yaml").read_text()
        return cls.from_dict(yaml.safe_load(text))


def sample(space, seed, trial_id=0):
    """Draw one configuration; identical ``(seed, trial_id)`` give identical draws."""
    rng = np.random.default_rng([int(seed), int(trial_id)])
    return {p.name: p.draw(rng) for p in space.params}


@dataclass
class Budget:
    max_trials: int = 32
    max_seconds: float = 600.0
    rungs: int = 1
    keep_fraction: float = 0.5

    def __post_init__(self):
        if self.max_trials < 1 or self.rungs < 1:
            raise ValueError("max_trials and rungs must be >= 1")
        if not 0 < self.keep_fraction < 1 and self.rungs > 1:
            raise ValueError("keep_fraction must lie in (0, 1)")

    def fractions(self):
        return [self.keep_fraction ** (self.rungs - 1 - j) for j in range(self.rungs)]

    def max_trainings(self):
        """Upper bound on rung-trainings: ``N + floor(N q) + floor(floor(N q) q) + ...``."""
        total, alive = 0, self.max_trials
        for _ in range(self.rungs):
            total += alive
            alive = max(1, int(alive * self.keep_fraction))
        return total


@dataclass
class TrialRecord:
    trial_id: int
    params: dict
    score: float | None = None
    rung: int = -1
    budget_fraction: float = 0.0
    scores_by_rung: list = field(default_factory=list)
    status: str = "pending"
    error: str | None = None
    wall_time: float = 0.0

    def to_dict(self, include_time=False):
        d = {
            "trial_id": self.trial_id,
            "params": self.params,
            "score": self.score,
            "rung": self.rung,
            "budget_fraction": self.budget_fraction,
            "scores_by_rung": self.scores_by_rung,
            "status": self.status,
            "error": self.error,
        }
        if include_time:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class TuneResult:
    best_params: dict
    best_score: float
    best_trial: int
    metric: str
    trials: list
    n_trainings: int
    best_estimator: object = None
    effective_params: dict = None


def effective_params(estimator, params):
    """Hyperparameters as the fitted estimator actually used them.

    A fitted ``<name>_`` scalar overrides the requested value, e.g. a DMD
    rank above the numerical rank is reported as the truncated ``rank_``.
    """
    out = dict(params)
    for name in params:
        value = getattr(estimator, name + "_", None)
        if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
            out[name] = value.item() if isinstance(value, np.generic) else value
    return out


class TuningError(RuntimeError):
    def __init__(self, message, failures):
        super().__init__(message)
        self.failures = failures


def _tail(X, frac, warmup):
    rows = X.shape[0]
    keep = warmup + math.ceil(frac * max(rows - warmup, 0))
    return X[rows - min(rows, keep):]


def validation_score(task, estimator, split, config):
    """Fit ``estimator`` on the tuning partition and score it on validation."""
    train = split.train
    estimator.fit(train)
    val = split.validation
    if task.task_kind == RECONSTRUCTION:
        # run over the contiguous noisy record so stateful models are warm at the cut
        full = np.vstack([split.train, split.validation_input])
        S = short_term_error(estimator.transform(full)[-val.shape[0]:], val, val.shape[0])
    else:
        pred = estimator.predict(val.shape[0], context=split.burnin)
        k = min(config.k_split, val.shape[0])
        if task.metric_kind == LT:
            S = long_term_error(pred, val, k, config.kmax)
        else:
            S = short_term_error(pred, val, k)
    return to_score(S)


def _metric_name(task):
    if task.task_kind == RECONSTRUCTION:
        return "ST(full window)"
    return task.metric_kind


def tune(estimator, task, bundle, space, budget=None, seed=0, workers=1):
    """Search ``space`` for the configuration with the best validation score.

    Returns
    -------
    TuneResult
        ``best_estimator`` is refit on the full tuning partition.
    """
    budget = budget or Budget()
    view = bundle.train_view() if isinstance(bundle, Bundle) else bundle
    split = make_tuning_split(task, view)
    config = view.config
    started = time.monotonic()
    records = {i: TrialRecord(i, sample(space, seed, i)) for i in range(budget.max_trials)}
    fractions = budget.fractions()
    trainings = 0

    def run(trial_id, rung):
        rec = records[trial_id]
        frac = fractions[rung]
        est = clone(estimator).set_params(**rec.params)
        warm = est.warmup_rows()
        part = type(split)(**vars(split))
        if isinstance(split.train, list):
            part.train = [_tail(x, frac, warm) for x in split.train]
        else:
            part.train = _tail(split.train, frac, warm)
        t0 = time.monotonic()
        try:
            score, error = validation_score(task, est, part, config), None
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, ScoringError) as exc:
            score, error = None, f"{type(exc).__name__}: {exc}"
        return trial_id, rung, frac, score, error, time.monotonic() - t0

    alive = list(range(budget.max_trials))
    for rung in range(budget.rungs):
        jobs = []
        for tid in alive:
            if time.monotonic() - started > budget.max_seconds:
                log.info("time budget of %ss reached at rung %d", budget.max_seconds, rung)
                break
            jobs.append(tid)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(lambda tid: run(tid, rung), jobs))
        else:
            outcomes = [run(tid, rung) for tid in jobs]
        trainings += len(outcomes)
        for tid, rg, frac, score, error, dt in sorted(outcomes):
            rec = records[tid]
            rec.rung, rec.budget_fraction, rec.wall_time = rg, frac, rec.wall_time + dt
            rec.scores_by_rung.append(score)
            rec.score, rec.error = score, error
            rec.status = "failed" if score is None else "ok"
        ranked = sorted((tid for tid, *_ in outcomes if records[tid].score is not None),
                        key=lambda tid: (-records[tid].score, tid))
        if not ranked or rung == budget.rungs - 1 or len(jobs) < len(alive):
            break
        alive = ranked[:max(1, int(len(ranked) * budget.keep_fraction))]

    done = [r for r in records.values() if r.score is not None]
    if not done:
        failures = {r.trial_id: r.error for r in records.values()}
        raise TuningError(f"all {len(records)} trials failed", failures)
    top = max(r.rung for r in done)
    best = min((r for r in done if r.rung == top), key=lambda r: (-r.score, r.trial_id))
    best_est = clone(estimator).set_params(**best.params).fit(split.train)
    log.info("best trial %d score %.4f params %s", best.trial_id, best.score, best.params)
    return TuneResult(
        best_params=dict(best.params),
        best_score=best.score,
        best_trial=best.trial_id,
        metric=_metric_name(task),
        trials=[records[i] for i in sorted(records)],
        n_trainings=trainings,
        best_estimator=best_est,
        effective_params=effective_params(best_est, best.params),
    )


def write_trials(trials, path, timings_path=None):
    """One JSON object per line; wall times go to an optional sidecar file."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trials:
            fh.write(_jsonfmt.dumps(rec.to_dict()) + "\n")
    if timings_path is not None:
        with open(timings_path, "w", encoding="utf-8") as fh:
            for rec in trials:
                fh.write(_jsonfmt.dumps({"trial_id": rec.trial_id, "wall_time": rec.wall_time}) + "\n")
