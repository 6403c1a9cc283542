import numpy as np
import pytest

from wavectf.presets import build_preset
from wavectf.splits import Bundle


@pytest.fixture(scope="session")
def bundle_root(tmp_path_factory):
    """A referee bundle (tests included) written to disk once per session."""
    root = tmp_path_factory.mktemp("bundles") / "swell-small"
    build_preset("swell-small", seed=0).save(root)
    return root


@pytest.fixture
def bundle(bundle_root):
    return Bundle.load(bundle_root)


@pytest.fixture
def truth_predictions(bundle):
    from wavectf.tasks import TASKS

    return {t.pred_key: np.array(bundle.test(t.truth_key)) for t in TASKS}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _ACCEPTANCE.append((marker.args[0], marker.kwargs.get("title", item.name), rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    results = {}
    for number, title, outcome in _ACCEPTANCE:
        ok = outcome == "passed" and results.get(number, (title, True))[1]
        results[number] = (title, ok)
    for number in sorted(results):
        title, ok = results[number]
        terminalreporter.write_line(f"AC{number:<3} {'PASS' if ok else 'FAIL'}  {title}")
