import numpy as np
import pytest

from pcvi import (
    ConfigurationError,
    InputError,
    NumericalDivergence,
    PerturbationSchedule,
    ProjectorSpec,
    SolverConfig,
    Status,
    VIProblem,
    residual,
    solve,
)
from pcvi.algorithms import ALGORITHM_IDS
from pcvi.problems import gen_affine_vi

from conftest import identity_problem


@pytest.mark.parametrize(
    "a,b,expected", [((0, 0), (0, 0), 0.0), ((1, 0), (0, 0), 1.0), ((3, 4), (0, 0), 5.0)]
)
def test_residual_examples(a, b, expected):
    assert residual(a, b) == expected


def test_residual_shape_mismatch():
    with pytest.raises(InputError):
        residual([1.0, 2.0], [1.0])


@pytest.mark.parametrize(
    "kw",
    [dict(gamma=0.0), dict(gamma=2.0), dict(nu=0.0), dict(nu=1.0), dict(rho_ls=1.0), dict(sigma_ls=0.0),
     dict(epsilon=0.0), dict(max_iter=0), dict(mu=0.35, nu=0.7)],
)
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        SolverConfig(**kw)


def test_mu_default_is_inside_both_ranges():
    c = SolverConfig(nu=0.7)
    assert 0 <= c.mu_effective < min(c.nu, 1 - c.nu)


def test_start_at_solution_stops_immediately():
    rep = solve(identity_problem(), "pc1", x0=[0.0])
    assert rep.converged
    assert rep.status in (Status.CONVERGED, Status.DEGENERATE_STEP)
    assert rep.iterations <= 1
    np.testing.assert_array_equal(rep.x_final, [0.0])


def test_geometric_halving_with_fixed_step():
    rep = solve(identity_problem(), "pc1", SolverConfig(fixed_beta=0.5, epsilon=1e-3), x0=[1.0])
    xs = [r.x[0] for r in rep.trace]
    assert xs[:10] == [0.5 ** (k + 1) for k in range(10)]
    assert rep.status is Status.CONVERGED


def test_max_iter_cap():
    rep = solve(identity_problem(), "pc1", SolverConfig(max_iter=3, epsilon=1e-300), x0=[1.0])
    assert rep.status is Status.MAX_ITERATIONS
    assert rep.iterations == 3


def test_dimension_mismatch():
    with pytest.raises(InputError):
        solve(identity_problem(2), "pc1", x0=[1.0])


def test_unknown_algorithm():
    with pytest.raises(InputError):
        solve(identity_problem(), "pc9", x0=[1.0])


def test_divergence_reports_iteration():
    def F(x):
        return x if abs(x[0]) > 0.1 else np.full(1, np.nan)

    prob = VIProblem.from_spec(F, ProjectorSpec.full(1))
    with pytest.raises(NumericalDivergence) as info:
        solve(prob, "pc1", SolverConfig(fixed_beta=0.5), x0=[1.0])
    assert info.value.k == 3


def test_contains_defaults_to_projection_check():
    spec = ProjectorSpec.ball([0.0, 0.0], 1.0)
    prob = VIProblem(dim=2, F=lambda x: x, project_C=spec.project)
    assert prob.contains(np.array([0.6, 0.0]))
    assert not prob.contains(np.array([2.0, 0.0]))


@pytest.fixture(scope="module")
def affine():
    return gen_affine_vi(10, skew_weight=0.5, kind="box", seed=2)


@pytest.mark.parametrize("alg", ALGORITHM_IDS)
def test_every_algorithm_solves_affine_vi(affine, alg):
    cfg = SolverConfig(gamma=0.045, epsilon=1e-9, max_iter=50_000) if alg == "ipc1-r56" else SolverConfig(
        epsilon=1e-9, max_iter=20_000
    )
    sched = None
    if alg == "ipc1-r56":
        sched = PerturbationSchedule.inertial(0.79, sigma_r=1e-6, delta_r=8.83)
    elif alg.endswith("-op"):
        sched = PerturbationSchedule.outer(1e-3, seed=1)
    elif alg.endswith("-bp"):
        sched = PerturbationSchedule.bounded(1e-3, seed=1)
    rep = solve(affine.to_problem(), alg, cfg, sched)
    assert rep.status is Status.CONVERGED, rep.audits
    assert rep.trace[-1].residual <= cfg.epsilon
    assert [r.k for r in rep.trace] == list(range(rep.iterations))
    assert rep.ergodic is not None and rep.ergodic[1] > 0
    np.testing.assert_allclose(rep.x_final, affine.x_star, atol=1e-6)


def test_seed_determinism(affine):
    prob = affine.to_problem()
    a = solve(prob, "pc1-op", SolverConfig(epsilon=1e-6), PerturbationSchedule.outer(0.1, seed=4))
    b = solve(prob, "pc1-op", SolverConfig(epsilon=1e-6), PerturbationSchedule.outer(0.1, seed=4))
    assert [r.x.tobytes() for r in a.trace] == [r.x.tobytes() for r in b.trace]
