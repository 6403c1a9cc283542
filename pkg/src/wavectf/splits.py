"""Dataset configs, twelve-task split generation, and bundle directories."""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _jsonfmt
from ._validation import check_matrix
from .io import read_matrix, write_matrix
from .preprocessing import NoiseSpec, add_noise, derive_seed
from .tasks import PARAMETRIC, RECONSTRUCTION, TEST_KEYS, TRAIN_KEYS

log = logging.getLogger(__name__)

# matrices drawn from the parametric family rather than the main source
PARAMETRIC_KEYS = frozenset({"X6train", "X7train", "X8train", "X9train", "X10train", "X8test", "X9test"})
ALL_KEYS = TRAIN_KEYS + TEST_KEYS
TUNING_TRAIN_FRACTION = (4, 5)


class SplitError(ValueError):
    pass


class TestAccessError(PermissionError):
    """A tuning or participant code path tried to read a withheld matrix."""

    __test__ = False


def standard_index_table(train_len, limited_len, test_len):
    """Index windows with the topology of the published shape tables.

    Full training windows cover ``[0, train_len)``; limited and burn-in windows
    are the last ``limited_len`` rows of that; every forecast or parametric
    truth is the ``test_len`` rows right after it, and reconstruction truths
    repeat the training window.
    """
    full = (0, train_len)
    tail = (train_len - limited_len, train_len)
    ahead = (train_len, train_len + test_len)
    table = {}
    for key in ("X1train", "X2train", "X3train", "X6train", "X7train", "X8train"):
        table[key] = full
    for key in ("X4train", "X5train", "X9train", "X10train"):
        table[key] = tail
    for key in TEST_KEYS:
        table[key] = ahead
    table["X2test"] = full
    table["X4test"] = full
    return {k: table[k] for k in ALL_KEYS}


@dataclass
class DatasetConfig:
    """Shapes, index windows and scoring parameters of one dataset.

    ``n_param`` is the spatial dimension of the parametric matrices
    (X6..X10train, X8/X9test) when it differs from ``n``.
    """

    name: str
    n: int
    m: int
    M: int
    dt: float
    k_split: int
    index_table: dict
    kmax: int = 100
    noise_low: NoiseSpec = field(default_factory=lambda: NoiseSpec(0.1, 1))
    noise_high: NoiseSpec = field(default_factory=lambda: NoiseSpec(1.0, 2))
    n_param: int | None = None

    def __post_init__(self):
        self.index_table = {k: (int(v[0]), int(v[1])) for k, v in self.index_table.items()}
        self.noise_low = _as_noise(self.noise_low)
        self.noise_high = _as_noise(self.noise_high)
        if self.n < 1 or (self.n_param is not None and self.n_param < 1):
            raise ValueError("spatial dimension must be positive")
        if not 0 < self.k_split <= 2 * self.m:
            raise ValueError(f"k_split={self.k_split} outside (0, 2m={2 * self.m}]")
        if self.M > self.m:
            raise ValueError(f"M={self.M} exceeds m={self.m}")
        if self.kmax < 1:
            raise ValueError("kmax must be positive")
        missing = [k for k in ALL_KEYS if k not in self.index_table]
        if missing:
            raise ValueError(f"index_table lacks {missing}")
        for key, (start, end) in self.index_table.items():
            if not 0 <= start < end:
                raise ValueError(f"{key}: bad window ({start}, {end})")

    def shape_of(self, key):
        start, end = self.index_table[key]
        cols = self.n_param if (key in PARAMETRIC_KEYS and self.n_param) else self.n
        return (end - start, cols)

    def window(self, key):
        return self.index_table[key]

    def to_dict(self):
        return {
            "name": self.name,
            "n": self.n,
            "n_param": self.n_param,
            "m": self.m,
            "M": self.M,
            "dt": float(self.dt),
            "k_split": self.k_split,
            "kmax": self.kmax,
            "noise_low": {"sigma_rel": float(self.noise_low.sigma_rel), "seed": int(self.noise_low.seed)},
            "noise_high": {"sigma_rel": float(self.noise_high.sigma_rel), "seed": int(self.noise_high.seed)},
            "index_table": {k: list(self.index_table[k]) for k in ALL_KEYS},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            n=int(d["n"]),
            n_param=None if d.get("n_param") is None else int(d["n_param"]),
            m=int(d["m"]),
            M=int(d["M"]),
            dt=float(d["dt"]),
            k_split=int(d["k_split"]),
            kmax=int(d.get("kmax", 100)),
            noise_low=d.get("noise_low", NoiseSpec(0.1, 1)),
            noise_high=d.get("noise_high", NoiseSpec(1.0, 2)),
            index_table=d["index_table"],
        )

    def to_json(self):
        return _jsonfmt.dumps(self.to_dict(), indent=2) + "\n"


def _as_noise(spec):
    if isinstance(spec, NoiseSpec):
        return spec
    return NoiseSpec(float(spec["sigma_rel"]), int(spec.get("seed", 0)))


def _table_config(name, n, m, M, dt, k_split, train_len, limited_len, test_len, n_param=None):
    return DatasetConfig(
        name=name, n=n, m=m, M=M, dt=dt, k_split=k_split,
        index_table=standard_index_table(train_len, limited_len, test_len),
        n_param=n_param,
    )


def global_wavefields_config():
    return _table_config("global-wavefields", 2048, 500, 500, 1.0, 500, 2000, 500, 1000)


def das_config():
    return _table_config("das", 3000, 500, 500, 0.2, 500, 2000, 500, 1000)


def crustal_config():
    # truth windows are 100 rows, so the split sits at half of that
    return _table_config("crustal", 62451, 250, 200, 0.02, 50, 500, 200, 100, n_param=26508)


def desk_config(name, n=256, m=64, M=64, dt=1.0):
    """Desk-scale layout: the published topology with a 4m/2m train/test split."""
    return _table_config(name, n, m, M, dt, m, 4 * m, M, 2 * m)


CONFIGS = {
    "global-wavefields": global_wavefields_config,
    "das": das_config,
    "crustal": crustal_config,
}


def _slice(arr, window, name):
    start, end = window
    if end > arr.shape[0]:
        raise SplitError(f"{name}: window ends at row {end} but source has {arr.shape[0]} rows")
    return np.ascontiguousarray(arr[start:end])


def make_splits(source, config, family=None):
    """Cut every train and test matrix of the twelve tasks.

    Parameters
    ----------
    source : array (rows, n)
        Clean trajectory for the forecasting, noisy and limited-data tasks.
    config : DatasetConfig
    family : sequence of five arrays
        Parametric trajectories ordered as three training parameters, then
        the interpolation and the extrapolation parameter.

    Returns
    -------
    dict mapping matrix names (``X1train`` .. ``X9test``) to arrays.
    """
    clean = check_matrix(source, name="source")
    if clean.shape[1] != config.n:
        raise SplitError(f"source has {clean.shape[1]} columns, config expects n={config.n}")
    if family is None or len(family) < 5:
        raise SplitError("parametric tasks need five trajectories (3 train, interpolation, extrapolation)")
    fam = [check_matrix(f, name=f"family[{i}]") for i, f in enumerate(family[:5])]
    n_param = config.n_param or config.n
    for i, f in enumerate(fam):
        if f.shape[1] != n_param:
            raise SplitError(f"family[{i}] has {f.shape[1]} columns, expected {n_param}")

    w = config.window
    out = {}
    out["X1train"] = _slice(clean, w("X1train"), "X1train")

    x2_clean = _slice(clean, w("X2train"), "X2train")
    out["X2train"] = add_noise(x2_clean, _matrix_noise(config.noise_low, "X2train"))
    x3_clean = _slice(clean, w("X3train"), "X3train")
    out["X3train"] = add_noise(x3_clean, _matrix_noise(config.noise_high, "X3train"))
    out["X4train"] = _slice(clean, w("X4train"), "X4train")
    out["X5train"] = _limited_noisy(clean, config)

    for key, traj in (("X6train", 0), ("X7train", 1), ("X8train", 2), ("X9train", 3), ("X10train", 4)):
        out[key] = _slice(fam[traj], w(key), key)

    for key in ("X1test", "X2test", "X3test", "X4test", "X5test", "X6test", "X7test"):
        out[key] = _slice(clean, w(key), key)
    out["X8test"] = _slice(fam[3], w("X8test"), "X8test")
    out["X9test"] = _slice(fam[4], w("X9test"), "X9test")

    for key, arr in out.items():
        if arr.shape != config.shape_of(key):
            raise SplitError(f"{key}: produced {arr.shape}, config says {config.shape_of(key)}")
    return {k: out[k] for k in ALL_KEYS}


def _matrix_noise(spec, key):
    return NoiseSpec(spec.sigma_rel, derive_seed(spec.seed, key))


def _limited_noisy(clean, config):
    # noise is drawn over the full noisy-training window (so its level matches
    # X3train) with an independent realization, then the limited window is cut
    outer = config.window("X3train")
    inner = config.window("X5train")
    if not (outer[0] <= inner[0] and inner[1] <= outer[1]):
        raise SplitError("X5train window must lie inside the X3train window")
    block = add_noise(_slice(clean, outer, "X3train"), _matrix_noise(config.noise_high, "X5train"))
    return np.ascontiguousarray(block[inner[0] - outer[0]:inner[1] - outer[0]])


@dataclass
class TuningSplit:
    """Train/validation partition of a task's public matrices.

    For reconstruction tasks the model is fit on ``train`` and asked to
    denoise ``validation_input``; ``validation`` is the clean target.
    """

    train: object
    validation: np.ndarray
    burnin: np.ndarray | None = None
    validation_input: np.ndarray | None = None


def _cut(rows):
    num, den = TUNING_TRAIN_FRACTION
    return rows * num // den


def make_tuning_split(task, bundle):
    """Partition a task's training data for hyperparameter tuning.

    E1-E10 use the first 80% of rows for training and the last 20% for
    validation. E11 trains on X6/X8train and validates on X7train, E12 trains
    on X6/X7train and validates on X8train; the burn-in window is the stretch
    of the validation trajectory right before its validation rows.
    """
    for key in task.train_keys:
        if not bundle.has(key):
            raise SplitError(f"{task.score_id}: bundle lacks {key}")
    if task.task_kind == PARAMETRIC:
        held = "X7train" if task.score_id == "E11" else "X8train"
        fit_keys = [k for k in task.train_keys if k != held]
        traj = bundle.train(held)
        s = _cut(traj.shape[0])
        burn_len = bundle.config.shape_of(task.burnin_key)[0]
        return TuningSplit(
            train=[bundle.train(k) for k in fit_keys],
            validation=traj[s:],
            burnin=traj[max(0, s - burn_len):s],
        )
    X = bundle.train(task.train_keys[0])
    s = _cut(X.shape[0])
    if s < 1 or s >= X.shape[0]:
        raise SplitError(f"{task.score_id}: {X.shape[0]} rows is too short to split")
    if task.task_kind == RECONSTRUCTION:
        if bundle.config.window("X1train") != bundle.config.window(task.train_keys[0]):
            raise SplitError("clean counterpart X1train does not cover the noisy window")
        clean = bundle.train("X1train")
        return TuningSplit(train=X[:s], validation=clean[s:], validation_input=X[s:])
    return TuningSplit(train=X[:s], validation=X[s:])


class Bundle:
    """A dataset's matrices, backed by a directory or held in memory.

    Reads are recorded in :attr:`accessed`, which lets callers prove that a
    code path never touched the withheld test matrices.
    """

    def __init__(self, config, matrices=None, root=None, hidden=None):
        self.config = config
        self.root = None if root is None else Path(root)
        self.hidden = dict(hidden or {})
        self._cache = dict(matrices or {})
        self.accessed = set()

    @classmethod
    def load(cls, root):
        root = Path(root)
        cfg_path = root / "dataset.json"
        if not cfg_path.is_file():
            raise FileNotFoundError(f"{root}: no dataset.json, not a bundle")
        config = DatasetConfig.from_dict(json.loads(cfg_path.read_text()))
        hidden_path = root / "hidden.json"
        hidden = json.loads(hidden_path.read_text()) if hidden_path.is_file() else {}
        return cls(config, root=root, hidden=hidden)

    def _path(self, key):
        return None if self.root is None else self.root / f"{key}.ctfw"

    def has(self, key):
        if key in self._cache:
            return True
        path = self._path(key)
        return path is not None and path.is_file()

    def _get(self, key):
        self.accessed.add(key)
        if key not in self._cache:
            if not self.has(key):
                raise KeyError(f"bundle has no {key}")
            self._cache[key] = read_matrix(self._path(key))
        return self._cache[key]

    def train(self, key):
        if key not in TRAIN_KEYS:
            raise KeyError(f"{key} is not a training matrix")
        return self._get(key)

    def test(self, key):
        if key not in TEST_KEYS:
            raise KeyError(f"{key} is not a test matrix")
        return self._get(key)

    @property
    def has_tests(self):
        return all(self.has(k) for k in TEST_KEYS)

    def train_view(self):
        return TrainView(self)

    def save(self, root, include_tests=True):
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        for key in ALL_KEYS:
            if key in TEST_KEYS and not include_tests:
                continue
            if self.has(key):
                write_matrix(self._get(key), root / f"{key}.ctfw")
        (root / "dataset.json").write_text(self.config.to_json())
        if include_tests and self.hidden:
            (root / "hidden.json").write_text(_jsonfmt.dumps(self.hidden, indent=2) + "\n")
        return root

    def content_hash(self):
        """SHA-256 over every file of a directory-backed bundle."""
        if self.root is None:
            raise ValueError("in-memory bundle has no files to hash")
        h = hashlib.sha256()
        for path in sorted(p for p in self.root.iterdir() if p.is_file()):
            h.update(path.name.encode())
            h.update(path.read_bytes())
        return h.hexdigest()


class TrainView:
    """Participant-side handle: exposes training matrices only."""

    def __init__(self, bundle):
        self._bundle = bundle
        self.config = bundle.config

    def has(self, key):
        return key in TRAIN_KEYS and self._bundle.has(key)

    def train(self, key):
        return self._bundle.train(key)

    def test(self, key):
        raise TestAccessError(f"{key} is withheld from participant code")


def publish(referee_root, public_root):
    """Copy the participant-facing part of a referee bundle.

    Only training matrices and ``dataset.json`` are copied; the result is
    checked to contain no test file.
    """
    src = Path(referee_root)
    dst = Path(public_root)
    dst.mkdir(parents=True, exist_ok=True)
    for key in TRAIN_KEYS:
        path = src / f"{key}.ctfw"
        if path.is_file():
            shutil.copyfile(path, dst / path.name)
    shutil.copyfile(src / "dataset.json", dst / "dataset.json")
    check_public(dst)
    return dst


def check_public(root):
    leaked = sorted(p.name for p in Path(root).iterdir() if "test" in p.name or p.name == "hidden.json")
    if leaked:
        raise SplitError(f"participant bundle {root} contains withheld files: {leaked}")
