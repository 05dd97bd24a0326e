import math

import pytest

from collgate.basis import initial_coeffs_same, relative_basis
from collgate.dynamics import free_trajectory, propagate_same
from collgate.model import TWO_PI, GateSchedule, preset


@pytest.fixture(scope="session")
def base():
    return preset("paper-fig2")[0]


@pytest.fixture(scope="session")
def bb_gate(base):
    """Interacting and free bb trajectories over the 7 T_osc gate."""
    tr = propagate_same(initial_coeffs_same(base, relative_basis(base, 60)), base, GateSchedule())
    return tr, free_trajectory(tr)


@pytest.fixture(scope="session")
def bb_one_period(base):
    tr = propagate_same(initial_coeffs_same(base), base, t_end=TWO_PI)
    return tr, free_trajectory(tr)


PI = math.pi


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
