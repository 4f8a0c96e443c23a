import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from collapse_lab import gn_core
from collapse_lab.grid2d import build_grid

settings.register_profile(
    "lab", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("lab")

# acceptance criterion -> (passed, detail); printed in the terminal summary
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def a_star():
    return gn_core.a_star()


@pytest.fixture(scope="session")
def grid8():
    return build_grid(8.0, 128)


@pytest.fixture(scope="session")
def big_grid():
    return build_grid(16.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def gaussian():
    """``gaussian(grid, center, width)`` -> unnormalized Gaussian field."""

    def make(grid, center=(0.0, 0.0), width=1.0):
        X, Y = grid.mesh()
        return np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2.0 * width**2))

    return make
