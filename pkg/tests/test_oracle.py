import numpy as np
import pytest

from pcvi import InputError, OracleError, ProjectorSpec, VIProblem
from pcvi.oracle import OracleConfig, estimate_lipschitz, minty_violation, oracle_project_l1, oracle_solve_vi
from pcvi.problems import gen_affine_vi

from conftest import affine_problem, identity_problem


def test_oracle_module_is_isolated():
    import ast
    import pathlib

    import pcvi.oracle as mod

    tree = ast.parse(pathlib.Path(mod.__file__).read_text())
    imported = {n.module for n in ast.walk(tree) if isinstance(n, ast.ImportFrom) and n.module}
    assert not imported & {"projections", "linesearch", "algorithms"}


def test_bisection_examples():
    np.testing.assert_array_equal(oracle_project_l1(np.array([0.2, -0.1]), 1.0), [0.2, -0.1])
    np.testing.assert_allclose(oracle_project_l1(np.array([2.0, 1.0]), 1.0), [1.0, 0.0], atol=1e-12)
    with pytest.raises(InputError):
        oracle_project_l1(np.ones(2), 0.0)


def test_identity_vi():
    np.testing.assert_allclose(oracle_solve_vi(identity_problem(5)), 0.0, atol=1e-11)


def test_halfline_vi():
    prob = affine_problem([[1.0]], [1.0], ProjectorSpec.box([0.0], [np.inf]))
    assert oracle_solve_vi(prob)[0] == pytest.approx(0.0, abs=1e-12)


def test_step_scale_self_consistency():
    inst = gen_affine_vi(20, 0.4, kind="box", seed=11)
    prob = inst.to_problem()
    a = oracle_solve_vi(prob, OracleConfig(step_scale=0.1))
    b = oracle_solve_vi(prob, OracleConfig(step_scale=0.25))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_minty_rejects_wrong_point():
    prob = affine_problem(np.eye(3), np.ones(3), ProjectorSpec.box(-np.ones(3), np.ones(3)))
    assert minty_violation(prob, np.ones(3), 200) < -1e-8


def test_oracle_raises_when_it_cannot_finish():
    prob = affine_problem(np.eye(2), np.ones(2), ProjectorSpec.full(2))
    with pytest.raises(OracleError):
        oracle_solve_vi(prob, OracleConfig(max_iter=3))


def test_dimension_limit():
    with pytest.raises(InputError):
        oracle_solve_vi(identity_problem(51))


def test_lipschitz_estimate_for_scaled_identity():
    assert estimate_lipschitz(lambda x: 3 * x, 4) == pytest.approx(3.0)


def test_config_validation():
    with pytest.raises(InputError):
        OracleConfig(tol=0.0)
    with pytest.raises(InputError):
        OracleConfig(step_scale=2.0)
