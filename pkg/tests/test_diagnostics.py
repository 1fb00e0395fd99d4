import numpy as np
import pytest

from pcvi import InputError, IterationRecord, SolverConfig, solve
from pcvi.diagnostics import (
    audit_report,
    ergodic_point,
    fejer_audit,
    monotonicity_probe,
    quasi_fejer_audit,
    rate_certificate,
    rho_bound_for,
    rho_lower_bound_pc1,
    rho_lower_bound_pc2,
    upsilon_series,
)
from pcvi.problems import gen_affine_vi, gen_lasso, lasso_mapping


def rec(k, y, rho=1.0, beta=1.0):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return IterationRecord(k=k, x=y, y=y, beta=beta, rho=rho, residual=1.0)


def test_pc1_bound_values():
    assert rho_lower_bound_pc1(0.7) == pytest.approx(0.3 / 1.49)
    assert rho_lower_bound_pc1(0.7) == pytest.approx(0.201342, abs=1e-6)
    assert rho_lower_bound_pc1(0.5) == pytest.approx(0.4)
    assert rho_lower_bound_pc1(1e-12) == pytest.approx(1.0)


def test_pc2_bound_values():
    assert rho_lower_bound_pc2(0.6, 0.0) == rho_lower_bound_pc1(0.6)
    assert rho_lower_bound_pc2(0.5, 0.2) == pytest.approx(0.3 / 1.89)
    assert rho_lower_bound_pc2(0.7, 0.29) == pytest.approx(0.01 / 2.5601)
    assert rho_lower_bound_pc2(0.7, 0.29) == pytest.approx(0.003906, abs=1e-6)


@pytest.mark.parametrize("args", [(0.0,), (1.0,), (1.5,)])
def test_pc1_bound_range(args):
    with pytest.raises(InputError):
        rho_lower_bound_pc1(*args)


def test_pc2_bound_range():
    with pytest.raises(InputError):
        rho_lower_bound_pc2(0.7, 0.31)


def test_ergodic_single_record():
    y, ups = ergodic_point([rec(0, [1.0, 0.0], rho=1.0, beta=0.5)])
    np.testing.assert_allclose(y, [1.0, 0.0])
    assert ups == 0.5


def test_ergodic_midpoint():
    y, _ = ergodic_point([rec(0, [1.0, 0.0]), rec(1, [0.0, 1.0])])
    np.testing.assert_allclose(y, [0.5, 0.5])


def test_ergodic_weighted_mean():
    trace = [rec(0, 0.0, beta=1.0), rec(1, 3.0, beta=2.0), rec(2, 0.0, beta=1.0)]
    y, ups = ergodic_point(trace)
    assert y[0] == pytest.approx(1.5) and ups == 4.0
    np.testing.assert_allclose(upsilon_series(trace), [1.0, 3.0, 4.0])


def test_ergodic_empty_trace():
    with pytest.raises(InputError):
        ergodic_point([])


@pytest.fixture(scope="module")
def affine20():
    return gen_affine_vi(20, skew_weight=0.3, kind="box", seed=4)


@pytest.fixture(scope="module")
def pc1_run(affine20):
    return solve(affine20.to_problem(), "pc1", SolverConfig(epsilon=1e-10, max_iter=20_000))


def test_rate_certificate_at_solution(affine20, pc1_run):
    prob = affine20.to_problem()
    cert = rate_certificate(pc1_run.trace, prob, pc1_run.x0, 1.0, [affine20.x_star])
    _, lhs, rhs, ok = cert.checks[0]
    assert 0 <= lhs <= rhs and ok


def test_rate_certificate_random_samples(affine20, pc1_run):
    prob = affine20.to_problem()
    rng = np.random.default_rng(0)
    samples = [prob.project_C(2 * rng.standard_normal(20)) for _ in range(50)]
    for t in (10, len(pc1_run.trace) - 1):
        cert = rate_certificate(pc1_run.trace, prob, pc1_run.x0, 1.0, samples, t=t)
        assert cert.passed
        assert cert.M_bound == 0.0


def test_rate_certificate_rejects_infeasible(affine20, pc1_run):
    with pytest.raises(InputError):
        rate_certificate(pc1_run.trace, affine20.to_problem(), pc1_run.x0, 1.0, [np.full(20, 5.0)])


def test_rate_rhs_halves_when_t_doubles(affine20):
    run = solve(affine20.to_problem(), "pc1", SolverConfig(epsilon=1e-12), audit=False)
    ups = upsilon_series(run.trace)
    h = len(ups) // 2
    # rho*beta is bounded below and above, so Upsilon grows linearly
    assert 1.5 < ups[2 * h - 1] / ups[h - 1] < 2.5


def test_fejer_audit_clean_and_corrupted(affine20, pc1_run):
    assert fejer_audit(pc1_run.trace, affine20.x_star, 1.0) == []
    assert fejer_audit(pc1_run.trace[:1], affine20.x_star, 1.0) == []
    bad = list(pc1_run.trace[:5])
    r = bad[2]
    bad[2] = IterationRecord(k=r.k, x=r.x + 100.0, y=r.y, beta=r.beta, rho=r.rho, residual=r.residual,
                             x_start=r.x_start, anchor=r.anchor, d_norm=r.d_norm)
    assert [k for k, _ in fejer_audit(bad, affine20.x_star, 1.0)] == [2]


def test_projected_fejer_form_for_pc2(affine20):
    run = solve(affine20.to_problem(), "pc2", SolverConfig(epsilon=1e-10))
    assert fejer_audit(run.trace, affine20.x_star, 1.0, form="projected") == []
    with pytest.raises(InputError):
        fejer_audit(run.trace, affine20.x_star, 1.0, form="weird")


def test_quasi_fejer_outer_run(affine20):
    from pcvi import PerturbationSchedule

    run = solve(affine20.to_problem(), "pc1-op", SolverConfig(epsilon=1e-7),
                PerturbationSchedule.outer(0.05, seed=2))
    assert quasi_fejer_audit(run.trace, affine20.x_star, 1.0) == []


def test_monotonicity_probe():
    assert monotonicity_probe(lambda x: x, 4, 200, seed=1) > 0
    assert monotonicity_probe(lambda x: -x, 4, 200, seed=1) < 0
    inst = gen_lasso(20, 50, 3, seed=1)
    assert monotonicity_probe(lasso_mapping(inst), 50, 200, seed=1) >= -1e-10
    with pytest.raises(InputError):
        monotonicity_probe(lambda x: x, 2, 0)


def test_rho_bound_lookup():
    cfg = SolverConfig(nu=0.7, mu=0.2)
    assert rho_bound_for("pc1-bp", cfg) == rho_lower_bound_pc1(0.7)
    assert rho_bound_for("pc2-op", cfg) == rho_lower_bound_pc2(0.7, 0.2)
    assert rho_bound_for("eg", cfg) is None


def test_audit_report_entries(pc1_run):
    names = [a[0] for a in audit_report(pc1_run)]
    assert names == ["trace_gap_free", "rho_lower_bound", "converged_residual", "upsilon_growth"]
    assert pc1_run.audits_passed
