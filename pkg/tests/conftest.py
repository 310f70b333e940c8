import numpy as np
import pytest

from biharm_dual import Grid2D, Nonlinearity, make_context


@pytest.fixture(scope="session")
def cubic():
    return Nonlinearity.power(4.0)


@pytest.fixture(scope="session")
def mixed():
    return Nonlinearity(((1.0, 4.0), (0.5, 6.0)))


@pytest.fixture(scope="session")
def ctx9(cubic):
    return make_context(Grid2D(9, 9), cubic)


@pytest.fixture(scope="session")
def ctx17(cubic):
    return make_context(Grid2D(17, 17), cubic)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def discrete_eigenvalue(grid, kx=1, ky=1):
    """Eigenvalue of the 5-point ``-Delta_h`` on the ``(kx, ky)`` sine mode."""
    mx = 4.0 / grid.hx**2 * np.sin(kx * np.pi * grid.hx / (2 * grid.lx)) ** 2
    my = 4.0 / grid.hy**2 * np.sin(ky * np.pi * grid.hy / (2 * grid.ly)) ** 2
    return mx + my


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, summary_line
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(summary_line(k))
