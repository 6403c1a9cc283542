"""The twelve scored tasks and the files that feed them."""
from __future__ import annotations

from dataclasses import dataclass

FORECAST = "forecast"
RECONSTRUCTION = "reconstruction"
PARAMETRIC = "parametric"
ST = "ST"
LT = "LT"


@dataclass(frozen=True)
class TaskSpec:
    score_id: str
    task_kind: str
    metric_kind: str
    train_keys: tuple
    truth_key: str
    pred_key: str
    burnin_key: str | None = None

    def pred_shape(self, config):
        return config.shape_of(self.truth_key)


TASKS = (
    TaskSpec("E1", FORECAST, ST, ("X1train",), "X1test", "X1pred"),
    TaskSpec("E2", FORECAST, LT, ("X1train",), "X1test", "X1pred"),
    TaskSpec("E3", RECONSTRUCTION, ST, ("X2train",), "X2test", "X2pred"),
    TaskSpec("E4", FORECAST, LT, ("X2train",), "X3test", "X3pred"),
    TaskSpec("E5", RECONSTRUCTION, ST, ("X3train",), "X4test", "X4pred"),
    TaskSpec("E6", FORECAST, LT, ("X3train",), "X5test", "X5pred"),
    TaskSpec("E7", FORECAST, ST, ("X4train",), "X6test", "X6pred"),
    TaskSpec("E8", FORECAST, LT, ("X4train",), "X6test", "X6pred"),
    TaskSpec("E9", FORECAST, ST, ("X5train",), "X7test", "X7pred"),
    TaskSpec("E10", FORECAST, LT, ("X5train",), "X7test", "X7pred"),
    TaskSpec("E11", PARAMETRIC, ST, ("X6train", "X7train", "X8train"), "X8test", "X8pred", "X9train"),
    TaskSpec("E12", PARAMETRIC, ST, ("X6train", "X7train", "X8train"), "X9test", "X9pred", "X10train"),
)

SCORE_IDS = tuple(t.score_id for t in TASKS)
PRED_KEYS = tuple(f"X{i}pred" for i in range(1, 10))
TRAIN_KEYS = tuple(f"X{i}train" for i in range(1, 11))
TEST_KEYS = tuple(f"X{i}test" for i in range(1, 10))

TASK_BY_ID = {t.score_id: t for t in TASKS}


def tasks_for_pred(pred_key):
    return [t for t in TASKS if t.pred_key == pred_key]
