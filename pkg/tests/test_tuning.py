import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavectf.baselines import DMD, ESN
from wavectf.splits import Bundle, TestAccessError, desk_config, make_splits
from wavectf.synth import LinearSystemConfig, gen_linear_system
from wavectf.tasks import TASK_BY_ID
from wavectf.tuning import (
    Budget,
    HyperParamSpace,
    ParamDist,
    TuningError,
    sample,
    tune,
    write_trials,
)

TRUE_RANK = 3
RANK_SPACE = HyperParamSpace.from_dict({"rank": {"type": "randint", "min": 1, "max": 11}})


def planted_bundle(seed=0):
    """Bundle whose every trajectory follows one rank-3 linear map."""
    cfg = desk_config("planted", n=20, m=16, M=16)
    lin = LinearSystemConfig(n=20, steps=6 * 16, seed=seed)
    source, A = gen_linear_system(lin)
    rng = np.random.default_rng(seed + 1)
    family = []
    for _ in range(5):
        x = source[0] * rng.uniform(0.5, 2.0) + source[1] * rng.uniform(-1, 1)
        traj = np.empty_like(source)
        traj[0] = x
        for t in range(1, traj.shape[0]):
            traj[t] = A @ traj[t - 1]
        family.append(traj)
    return Bundle(cfg, make_splits(source, cfg, family))


@pytest.fixture(scope="module")
def planted():
    return planted_bundle()


def test_choice_frequencies():
    space = HyperParamSpace.from_dict({"g": {"type": "choice", "options": [16, 32, 64, 128]}})
    draws = [sample(space, seed=0, trial_id=i)["g"] for i in range(4000)]
    for option in (16, 32, 64, 128):
        assert 0.22 <= draws.count(option) / len(draws) <= 0.28


def test_loguniform_bounds_and_shape():
    space = HyperParamSpace.from_dict({"beta": {"type": "loguniform", "min": 1e-10, "max": 1e-1}})
    vals = np.array([sample(space, 1, i)["beta"] for i in range(4000)])
    assert vals.min() >= 1e-10 and vals.max() <= 1e-1
    logs = np.log10(vals)
    # uniform in the exponent: each decade holds about 1/9 of the draws
    counts, _ = np.histogram(logs, bins=9, range=(-10, -1))
    assert counts.min() > 0.8 * len(vals) / 9


def test_randint_upper_bound_is_exclusive():
    space = HyperParamSpace.from_dict({"L": {"type": "randint", "min": 1, "max": 10}})
    vals = {sample(space, 2, i)["L"] for i in range(2000)}
    assert vals == set(range(1, 10))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 10_000))
def test_sampling_is_a_function_of_seed_and_trial(seed, trial):
    space = HyperParamSpace.builtin("esn")
    assert sample(space, seed, trial) == sample(space, seed, trial)


def test_builtin_spaces_match_their_tables():
    esn = {p.name: p for p in HyperParamSpace.builtin("esn").params}
    assert esn["g"].options == (16, 32, 64, 128)
    assert (esn["sigma"].kind, esn["sigma"].low, esn["sigma"].high) == ("loguniform", 1e-4, 1.0)
    assert (esn["L"].kind, esn["L"].low, esn["L"].high) == ("randint", 1, 10)
    assert (esn["rho"].kind, esn["rho"].low, esn["rho"].high) == ("uniform", 0.02, 1.0)
    assert (esn["beta"].kind, esn["beta"].low, esn["beta"].high) == ("loguniform", 1e-10, 1e-1)
    assert (esn["N_h"].kind, esn["N_h"].low, esn["N_h"].high) == ("randint", 500, 3000)
    hodmd = {p.name: p for p in HyperParamSpace.builtin("hodmd").params}
    assert (hodmd["rank"].low, hodmd["rank"].high) == (3, 50)
    assert (hodmd["delay"].low, hodmd["delay"].high) == (0, 200)


@pytest.mark.parametrize("bad", [dict(kind="gaussian", low=0, high=1), dict(kind="loguniform", low=0, high=1),
                                 dict(kind="randint", low=3, high=3), dict(kind="choice")])
def test_bad_distributions_rejected(bad):
    with pytest.raises(ValueError):
        ParamDist("x", **bad)


def test_planted_rank_is_found(planted):
    result = tune(DMD(), TASK_BY_ID["E1"], planted, RANK_SPACE, Budget(max_trials=32), seed=0)
    assert result.best_estimator.rank_ == TRUE_RANK
    assert result.effective_params == {"rank": TRUE_RANK}
    assert result.best_params["rank"] >= TRUE_RANK
    assert result.best_score > 99
    under = [r.score for r in result.trials if r.params["rank"] < TRUE_RANK]
    assert under and max(under) < result.best_score


@pytest.mark.parametrize("n,rungs,keep", [(32, 3, 0.5), (20, 4, 0.5), (9, 2, 0.34)])
def test_halving_respects_training_bound(planted, n, rungs, keep):
    budget = Budget(max_trials=n, rungs=rungs, keep_fraction=keep)
    result = tune(DMD(), TASK_BY_ID["E1"], planted, RANK_SPACE, budget, seed=1)
    bound, alive = 0, n
    for _ in range(rungs):
        bound += alive
        alive = max(1, math.floor(alive * keep))
    assert result.n_trainings <= bound == budget.max_trainings()
    per_rung = [sum(1 for r in result.trials if r.rung >= j) for j in range(rungs)]
    assert per_rung == sorted(per_rung, reverse=True)
    fractions = budget.fractions()
    assert fractions[-1] == 1.0 and fractions == sorted(fractions)


def test_promotion_keeps_the_best(planted):
    result = tune(DMD(), TASK_BY_ID["E1"], planted, RANK_SPACE, Budget(max_trials=8, rungs=2), seed=3)
    first = sorted(result.trials, key=lambda r: (-r.scores_by_rung[0], r.trial_id))
    promoted = {r.trial_id for r in result.trials if r.rung == 1}
    assert promoted == {r.trial_id for r in first[:4]}


def test_tuning_never_reads_test_matrices(planted):
    planted.accessed.clear()
    tune(DMD(), TASK_BY_ID["E9"], planted, RANK_SPACE, Budget(max_trials=4), seed=0)
    tune(DMD(), TASK_BY_ID["E11"], planted, RANK_SPACE, Budget(max_trials=4), seed=0)
    assert planted.accessed and not any(k.endswith("test") for k in planted.accessed)
    with pytest.raises(TestAccessError):
        planted.train_view().test("X1test")


def test_results_are_deterministic_across_workers(planted, tmp_path):
    runs = []
    for workers in (1, 3):
        result = tune(DMD(), TASK_BY_ID["E1"], planted, RANK_SPACE, Budget(max_trials=10, rungs=2), seed=5,
                      workers=workers)
        path = tmp_path / f"trials{workers}.jsonl"
        write_trials(result.trials, path, timings_path=tmp_path / f"t{workers}.jsonl")
        runs.append(path.read_bytes())
    assert runs[0] == runs[1]


def test_all_failing_trials_raise(planted):
    space = HyperParamSpace.from_dict({"rho": {"type": "uniform", "min": -2.0, "max": -1.0}})
    with pytest.raises(TuningError) as info:
        tune(ESN(N_h=50), TASK_BY_ID["E1"], planted, space, Budget(max_trials=3), seed=0)
    assert len(info.value.failures) == 3


def test_reconstruction_task_tunes(planted):
    noisy = HyperParamSpace.from_dict({"rank": {"type": "randint", "min": 1, "max": 6}})
    result = tune(DMD(), TASK_BY_ID["E3"], planted, noisy, Budget(max_trials=5), seed=0)
    assert result.metric == "ST(full window)"
    assert -100 <= result.best_score <= 100


def test_effective_params_prefer_fitted_values():
    from wavectf.tuning import effective_params

    class Fitted:
        rank_ = np.int64(3)
        flag_ = True

    assert effective_params(Fitted(), {"rank": 9, "flag": False, "delay": 2}) == {"rank": 3, "flag": False, "delay": 2}


def test_reconstruction_validation_is_not_a_copy_of_the_input(planted):
    # the validation slice is shorter than the spin-up; trials must still differ
    space = HyperParamSpace.from_dict({"rho": {"type": "uniform", "min": 0.1, "max": 0.9},
                                       "beta": {"type": "loguniform", "min": 1e-8, "max": 1e-1}})
    result = tune(ESN(N_h=60, n_spin=50), TASK_BY_ID["E3"], planted, space, Budget(max_trials=3), seed=0)
    assert len({r.score for r in result.trials}) == 3
