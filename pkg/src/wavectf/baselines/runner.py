"""Produce all nine prediction matrices of a submission from one method."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from sklearn.base import clone

from .. import _jsonfmt
from ..io import write_matrix
from ..tasks import PRED_KEYS, TASKS
from .base import AverageForecaster, ZerosForecaster
from .dmd import DMD
from .esn import ESN

log = logging.getLogger(__name__)

METHODS = {
    "zeros": ZerosForecaster,
    "average": AverageForecaster,
    "dmd": DMD,
    "hodmd": DMD,
    "esn": ESN,
}

# prediction key -> (training matrices, action, burn-in key)
PLAN = {
    "X1pred": (("X1train",), "forecast", None),
    "X2pred": (("X2train",), "reconstruct", None),
    "X3pred": (("X2train",), "forecast", None),
    "X4pred": (("X3train",), "reconstruct", None),
    "X5pred": (("X3train",), "forecast", None),
    "X6pred": (("X4train",), "forecast", None),
    "X7pred": (("X5train",), "forecast", None),
    "X8pred": (("X6train", "X7train", "X8train"), "forecast", "X9train"),
    "X9pred": (("X6train", "X7train", "X8train"), "forecast", "X10train"),
}


def make_estimator(method, params=None):
    try:
        cls = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    return cls(**(params or {}))


def _pred_shape(config, pred_key):
    task = next(t for t in TASKS if t.pred_key == pred_key)
    return task.pred_shape(config)


def run_baseline(estimator, bundle, overrides=None):
    """Fit and predict every task using only training matrices.

    Parameters
    ----------
    estimator : forecaster
        Template; it is cloned per fit.
    bundle : Bundle or TrainView
    overrides : dict, optional
        ``pred_key -> params`` applied on top of the template for that task.

    Returns
    -------
    predictions : dict pred_key -> ndarray
    failures : dict pred_key -> reason
    """
    overrides = overrides or {}
    fitted = {}
    predictions, failures = {}, {}
    for key in PRED_KEYS:
        train_keys, action, burn_key = PLAN[key]
        params = overrides.get(key, {})
        cache_key = (train_keys, tuple(sorted(params.items())))
        rows, cols = _pred_shape(bundle.config, key)
        try:
            if cache_key not in fitted:
                model = clone(estimator).set_params(**params)
                data = [bundle.train(k) for k in train_keys]
                fitted[cache_key] = model.fit(data if len(data) > 1 else data[0])
            model = fitted[cache_key]
            if action == "reconstruct":
                pred = model.transform(bundle.train(train_keys[0]))
            else:
                context = bundle.train(burn_key) if burn_key else None
                pred = model.predict(rows, context=context)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            failures[key] = f"{type(exc).__name__}: {exc}"
            log.warning("%s failed: %s", key, exc)
            continue
        if pred.shape != (rows, cols):
            failures[key] = f"produced shape {pred.shape}, expected {(rows, cols)}"
        elif not np.isfinite(pred).all():
            failures[key] = "prediction diverged to non-finite values"
        else:
            predictions[key] = pred
    for key, reason in failures.items():
        log.warning("%s omitted from submission: %s", key, reason)
    return predictions, failures


def write_submission(predictions, out_dir, dataset, method):
    """Write ``X*pred.ctfw`` files and a ``manifest.json`` listing them."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    listed = {}
    for key in PRED_KEYS:
        if key in predictions:
            write_matrix(predictions[key], out / f"{key}.ctfw")
            listed[key] = f"{key}.ctfw"
    manifest = {"dataset": dataset, "method": method, "predictions": listed}
    path = out / "manifest.json"
    path.write_text(_jsonfmt.dumps(manifest, indent=2) + "\n")
    return path
