"""Input validation shared by the estimators and the scoring engine."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


class DegenerateInputError(ValueError):
    """Raised when an input carries no usable variation (e.g. a constant field)."""


def check_matrix(X, name="X", allow_empty=False):
    """Return ``X`` as a C-contiguous 2-D float64 array with finite entries.

    A 1-D input is treated as a single spatial channel (one column).
    """
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if allow_empty and arr.ndim == 2 and arr.size == 0:
        return np.ascontiguousarray(arr, dtype=np.float64)
    try:
        return check_array(
            arr,
            dtype=np.float64,
            order="C",
            ensure_all_finite=True,
            ensure_min_samples=1,
            ensure_min_features=1,
            input_name=name,
        )
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from exc


def check_trajectories(X, name="X"):
    """Accept one matrix or a list of matrices sharing a column count."""
    if isinstance(X, (list, tuple)):
        mats = [check_matrix(x, name=f"{name}[{i}]") for i, x in enumerate(X)]
        if not mats:
            raise ValueError(f"{name}: empty trajectory list")
        cols = {m.shape[1] for m in mats}
        if len(cols) != 1:
            raise ValueError(f"{name}: trajectories disagree on column count {sorted(cols)}")
        return mats
    return [check_matrix(X, name=name)]
