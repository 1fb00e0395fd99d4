import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pcvi import ProjectorSpec, SolverConfig, StepState, VIProblem

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def identity_problem(dim=1, spec=None):
    """F(x) = x on the full space (or on ``spec``)."""
    spec = spec or ProjectorSpec.full(dim)
    return VIProblem.from_spec(lambda x: np.asarray(x, dtype=float).copy(), spec, lipschitz_hint=1.0)


def affine_problem(M, q, spec):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    return VIProblem.from_spec(lambda x: M @ x + q, spec, lipschitz_hint=float(np.linalg.norm(M, 2)))


def state(x, x_prev=None, k=0):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = None if x_prev is None else np.atleast_1d(np.asarray(x_prev, dtype=float))
    return StepState(x=x, x_prev=xp, k=k)


@pytest.fixture
def one_d():
    return identity_problem(1)


@pytest.fixture
def cfg_half():
    """gamma = 1 with the step size pinned at 0.5."""
    return SolverConfig(gamma=1.0, fixed_beta=0.5)


# acceptance criteria report: (number, passed, detail), printed after the run
ACCEPTANCE = []


def record_criterion(number, passed, detail):
    ACCEPTANCE.append((number, bool(passed), detail))
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
