import numpy as np
import pytest

from rrur.geometry import default_params, neutral_height, workspace_box


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def z0(params):
    return neutral_height(params)


@pytest.fixture(scope="session")
def box(params):
    return workspace_box(params)


def random_poses(box, n, seed):
    rng = np.random.default_rng(seed)
    return [rng.uniform(lo, hi, n) for lo, hi in box]


# one line per acceptance criterion, printed after the run regardless of capture
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
