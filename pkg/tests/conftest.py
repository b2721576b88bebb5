import numpy as np
import pytest

from ovrlogit.dataset import default_wine_path, load_csv
from ovrlogit.pipeline import RunConfig, fit_and_evaluate, prepare_split

WINE_SEED = 15


@pytest.fixture(scope="session")
def wine():
    return load_csv(default_wine_path())


@pytest.fixture(scope="session")
def wine_prep(wine):
    return prepare_split(wine, 0.2, WINE_SEED)


@pytest.fixture(scope="session")
def run_config():
    return RunConfig()


@pytest.fixture(scope="session")
def wine_results(run_config, wine_prep):
    """All three solvers fitted on the seed-15 split with default settings."""
    return {s: fit_and_evaluate(run_config, wine_prep, s) for s in ("gd", "reference", "l1")}


@pytest.fixture
def rng():
    return np.random.default_rng(20240615)


# -- acceptance reporting ---------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when == "teardown":
        return
    number, title = marker.args
    # a failing fixture never reaches the call phase, so count setup errors too
    if call.when != "call" and call.excinfo is None:
        return
    ok = call.excinfo is None
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
