import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcvi import InputError, OracleError, ProjectorSpec, SolverConfig, solve
from pcvi.diagnostics import monotonicity_probe
from pcvi.problems import (
    affine_vi,
    gen_affine_vi,
    gen_lasso,
    lasso_mapping,
    lasso_objective,
    load_lasso_bundle,
    save_lasso_bundle,
)


def test_table_shape_instance():
    inst = gen_lasso(240, 1024, 20, seed=0)
    assert inst.A.shape == (240, 1024)
    assert np.count_nonzero(inst.x_true) == 20
    assert inst.t == pytest.approx(np.abs(inst.x_true).sum())
    assert set(np.abs(inst.x_true[inst.x_true != 0])) == {1.0}
    np.testing.assert_allclose(inst.b, inst.A @ inst.x_true)


def test_noisy_instance():
    inst = gen_lasso(240, 1024, 30, noise_beta=0.01, seed=1)
    e = inst.b - inst.A @ inst.x_true
    assert 0.005 < e.std() < 0.02
    var = gen_lasso(240, 1024, 30, noise_beta=1e-4, noise_mode="variance", seed=1)
    np.testing.assert_allclose(var.b, inst.b)


def test_empty_signal_converges_at_once():
    inst = gen_lasso(20, 50, 0, seed=2)
    assert not inst.x_true.any() and not inst.b.any()
    rep = solve(inst.to_problem(), "pc1")
    assert rep.converged and rep.iterations <= 1


@pytest.mark.parametrize("args", [(240, 1024, 2000), (1024, 1024, 5), (2000, 1024, 5)])
def test_bad_shapes(args):
    with pytest.raises(InputError):
        gen_lasso(*args)


def test_determinism():
    a, b = gen_lasso(30, 90, 5, 0.1, seed=7), gen_lasso(30, 90, 5, 0.1, seed=7)
    for f in ("A", "b", "x_true"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()


def test_scalar_radius_and_jitter():
    inst = gen_lasso(30, 90, 5, t_policy=2.5, seed=3, jitter=True)
    assert inst.t == 2.5 and inst.t_policy == "scalar"
    mags = np.abs(inst.x_true[inst.x_true != 0])
    assert np.all((mags >= 0.5) & (mags <= 1.5))


def test_mapping_examples():
    inst = gen_lasso(30, 90, 5, seed=4)
    F = lasso_mapping(inst)
    np.testing.assert_allclose(F(inst.x_true), 0.0, atol=1e-12)
    np.testing.assert_allclose(F(np.zeros(90)), -inst.A.T @ inst.b)
    assert monotonicity_probe(F, 90, 300, seed=0) >= -1e-10
    # exact top eigenvalue versus the power-iteration estimate
    L = np.linalg.eigvalsh(inst.A.T @ inst.A)[-1]
    assert L <= 1.05 * F.lipschitz
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.standard_normal(90), rng.standard_normal(90)
        assert np.linalg.norm(F(x) - F(y)) <= 1.05 * F.lipschitz * np.linalg.norm(x - y)


def test_batched_mapping_agrees():
    inst = gen_lasso(30, 90, 5, seed=4)
    F = lasso_mapping(inst)
    rng = np.random.default_rng(1)
    X = rng.standard_normal((7, 90))
    X[:, 10:] *= rng.random((7, 80)) < 0.05  # sparse rows take the Gram path
    np.testing.assert_allclose(F.rows(X), np.array([F(x) for x in X]), rtol=1e-10, atol=1e-10)
    x = rng.standard_normal(90)
    np.testing.assert_allclose(F.pairing_rows(x, X), [(F(x) - F(y)) @ (x - y) for y in X], rtol=1e-9)


def test_objective_examples():
    inst = gen_lasso(30, 90, 5, seed=4)
    assert lasso_objective(inst, inst.x_true) == pytest.approx(0.0, abs=1e-20)
    assert lasso_objective(inst, np.zeros(90)) == pytest.approx(0.5 * inst.b @ inst.b)
    with pytest.raises(InputError):
        lasso_objective(inst, np.zeros(3))


@given(st.integers(0, 10_000))
def test_objective_gradient_is_mapping(seed):
    inst = gen_lasso(15, 40, 3, noise_beta=0.1, seed=seed % 50)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(40)
    h = 1e-5
    g = np.array([(lasso_objective(inst, x + h * e) - lasso_objective(inst, x - h * e)) / (2 * h)
                  for e in np.eye(40)])
    Fx = lasso_mapping(inst)(x)
    assert np.linalg.norm(g - Fx) <= 1e-5 * np.linalg.norm(Fx)


def test_exact_radius_keeps_signal_feasible():
    inst = gen_lasso(30, 90, 5, seed=5)
    np.testing.assert_array_equal(inst.to_problem().project_C(inst.x_true), inst.x_true)


def test_bundle_roundtrip(tmp_path):
    inst = gen_lasso(12, 30, 4, noise_beta=0.05, seed=6)
    save_lasso_bundle(inst, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["A.bin", "b.csv", "meta.json", "x_true.csv"]
    back = load_lasso_bundle(tmp_path)
    assert back.A.tobytes() == inst.A.tobytes()
    assert back.b.tobytes() == inst.b.tobytes()
    assert back.x_true.tobytes() == inst.x_true.tobytes()
    assert back.metadata() == inst.metadata()


def test_affine_full_space_solves_linear_system():
    inst = gen_affine_vi(6, 0.0, kind="full", seed=1)
    np.testing.assert_allclose(inst.M @ inst.x_star + inst.q, 0.0, atol=1e-9)


def test_affine_halfline_boundary_solution():
    inst = affine_vi([[1.0]], [1.0], ProjectorSpec.box([0.0], [np.inf]))
    assert inst.x_star[0] == pytest.approx(0.0, abs=1e-12)


def test_pure_skew_over_ball():
    inst = gen_affine_vi(6, skew_weight=1.0, kind="ball", seed=3)
    M = inst.M - inst.M.T  # the skew part alone
    pure = affine_vi(0.5 * M, inst.q, inst.spec)
    rep = solve(pure.to_problem(), "pc1", SolverConfig(epsilon=1e-10, max_iter=50_000))
    np.testing.assert_allclose(rep.x_final, pure.x_star, atol=1e-6)


def test_affine_rejects_non_monotone():
    with pytest.raises(InputError):
        affine_vi([[-1.0]], [0.0], ProjectorSpec.full(1))


def test_affine_generator_limits():
    with pytest.raises(InputError):
        gen_affine_vi(51)
    with pytest.raises(InputError):
        gen_affine_vi(3, kind="simplex")


def test_affine_generator_invariants():
    inst = gen_affine_vi(12, 0.7, kind="box", seed=9)
    assert np.linalg.eigvalsh(0.5 * (inst.M + inst.M.T)).min() >= -1e-10
    rng = np.random.default_rng(0)
    prob = inst.to_problem()
    for _ in range(1000):
        x = prob.project_C(2 * rng.standard_normal(12))
        assert inst.F(x) @ (x - inst.x_star) >= -1e-8
