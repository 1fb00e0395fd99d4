"""Step functions for the extragradient baseline and the PC-algorithm family.

Every step maps ``(StepState, problem, config, ...)`` to
``(StepState, IterationRecord)``. The ``*_step`` functions take their
perturbation / inertia inputs explicitly; the registry in :data:`ALGORITHMS`
wraps them with adapters that draw those inputs from a
:class:`~pcvi.perturbations.PerturbationSchedule`.

Notation: ``y`` is the predictor, ``d`` the correction direction,
``rho = <x - y, d> / ||d||^2`` the contraction factor and ``gamma`` the
relaxation. "PC I" updates ``x - gamma rho d``; "PC II" projects
``x - gamma rho beta F(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import IterationRecord, StepState
from .errors import ConfigurationError, DegenerateStep, InputError
from .linesearch import LineSearchParams, backtrack_beta
from .perturbations import (
    PerturbationSchedule,
    bounded_at,
    inertial_alpha,
    outer_at,
    validate_remark56,
)

# paper experiment settings for the inertial variants
DEFAULT_ALPHA_OP = 0.4
DEFAULT_ALPHA_BP = 0.8
DEFAULT_ALPHA_R56 = 0.79

MAX_CLIP_ROUNDS = 50


def _predict(x, Fx, problem, config, beta=None, shift=None):
    """Return ``(beta, y, trials)`` for ``y = P_C(x - beta F(x) [+ shift])``."""
    if beta is None:
        beta = config.fixed_beta
    if beta is not None:
        z = x - beta * Fx
        if shift is not None:
            z = z + shift
        return beta, problem.project_C(z), 0
    ls = backtrack_beta(x, problem, LineSearchParams.from_config(config), Fx=Fx, shift=shift)
    return ls.beta, ls.y, ls.trials


def _check_direction(x, d, config):
    dn = float(np.linalg.norm(d))
    if dn <= config.degenerate_threshold(x):
        raise DegenerateStep(x, dn)
    return dn


def _displacement(state):
    if state.x_prev is None:
        return np.zeros_like(state.x)
    return state.x - state.x_prev


# -- kernels shared by the base and bounded/inertial (displaced) variants -----------


def _pc_at(w, state, problem, config, projected, beta=None):
    """One PC I (``projected=False``) or PC II step started from ``w``."""
    Fw = problem.F(w)
    beta, y, trials = _predict(w, Fw, problem, config, beta)
    Fy = problem.F(y)
    wy = w - y
    d = wy - beta * (Fw - Fy)
    dn = _check_direction(w, d, config)
    rho = float(wy @ d) / float(d @ d)
    if projected:
        x_new = problem.project_C(w - config.gamma * rho * beta * Fy)
    else:
        x_new = w - config.gamma * rho * d
    rec = IterationRecord(
        k=state.k,
        x=x_new,
        y=y,
        beta=beta,
        rho=rho,
        residual=float(np.linalg.norm(x_new - state.x)),
        d_norm=dn,
        trials=trials,
        x_start=state.x,
        anchor=w,
    )
    return StepState(x=x_new, x_prev=state.x, k=state.k + 1), rec


def extragradient_step(state, problem, config, beta=None):
    """Korpelevich extragradient: two projections per iteration."""
    x = state.x
    Fx = problem.F(x)
    beta, y, trials = _predict(x, Fx, problem, config, beta)
    _check_direction(x, x - y, config)
    x_new = problem.project_C(x - beta * problem.F(y))
    rec = IterationRecord(
        k=state.k,
        x=x_new,
        y=y,
        beta=beta,
        rho=1.0,  # no contraction factor; ergodic weights reduce to beta
        residual=float(np.linalg.norm(x_new - x)),
        trials=trials,
        x_start=x,
        anchor=x,
    )
    return StepState(x=x_new, x_prev=x, k=state.k + 1), rec


def pc1_step(state, problem, config, beta=None):
    """PC-algorithm I: ``x^{k+1} = x^k - gamma rho_k d(x^k, y^k)``."""
    return _pc_at(state.x, state, problem, config, projected=False, beta=beta)


def pc2_step(state, problem, config, beta=None):
    """PC-algorithm II: ``x^{k+1} = P_C(x^k - gamma rho_k beta_k F(y^k))``."""
    return _pc_at(state.x, state, problem, config, projected=True, beta=beta)


def pc1_op_step(state, problem, config, e1, e2, beta=None):
    """PC I with outer perturbations.

    ``e1`` is added to the predictor after projection, ``e2`` to the update.
    The step condition is checked at the unperturbed projection ``y - e1``,
    which is also what the record stores as its feasible predictor.
    """
    x = state.x
    Fx = problem.F(x)
    beta, y_feas, trials = _predict(x, Fx, problem, config, beta)
    y = y_feas + e1
    u = x - y + e1
    d = u - beta * (Fx - problem.F(y_feas))
    dn = _check_direction(x, d, config)
    rho = float(u @ d) / float(d @ d)
    x_new = x - config.gamma * rho * d + e2
    rec = IterationRecord(
        k=state.k,
        x=x_new,
        y=y_feas,
        beta=beta,
        rho=rho,
        residual=float(np.linalg.norm(x_new - x)),
        perturbation_norms=(float(np.linalg.norm(e1)), float(np.linalg.norm(e2))),
        d_norm=dn,
        trials=trials,
        x_start=x,
        anchor=x,
        e1=e1,
    )
    return StepState(x=x_new, x_prev=x, k=state.k + 1), rec


def _clipped_predict(x, Fx, problem, config, e1, beta=None):
    """Predictor ``P_C(x - beta F(x) + e)`` with ``||e|| <= mu ||x - y||`` enforced.

    ``e`` starts as ``e1`` and is rescaled onto the admissible boundary until the
    bound holds at the resulting ``y`` (it is dropped if that does not settle).
    Returns ``(beta, y, trials, e)``.
    """
    mu = config.mu_effective
    e = e1
    for _ in range(MAX_CLIP_ROUNDS):
        beta_k, y, trials = _predict(x, Fx, problem, config, beta, shift=e)
        en = float(np.linalg.norm(e))
        gap = float(np.linalg.norm(x - y))
        if en <= mu * gap:
            return beta_k, y, trials, e
        e = e * (mu * gap / en)
    e = np.zeros_like(e1)
    beta_k, y, trials = _predict(x, Fx, problem, config, beta, shift=e)
    return beta_k, y, trials, e


def pc2_op_step(state, problem, config, e1, e2, beta=None):
    """PC II with outer perturbations.

    ``e1`` enters inside the predictor projection and is clipped to
    ``||e1|| <= mu ||x - y||``; ``e2`` enters inside the update projection.
    """
    x = state.x
    Fx = problem.F(x)
    beta, y, trials, e = _clipped_predict(x, Fx, problem, config, e1, beta)
    Fy = problem.F(y)
    xy = x - y
    d = xy - beta * (Fx - Fy) + e
    dn = _check_direction(x, d, config)
    rho = float(xy @ d) / float(d @ d)
    x_new = problem.project_C(x - config.gamma * rho * beta * Fy + e2)
    e_norm = float(np.linalg.norm(e))
    rec = IterationRecord(
        k=state.k,
        x=x_new,
        y=y,
        beta=beta,
        rho=rho,
        residual=float(np.linalg.norm(x_new - x)),
        perturbation_norms=(e_norm, float(np.linalg.norm(e2))),
        d_norm=dn,
        trials=trials,
        x_start=x,
        anchor=x,
        alpha_shrunk=e is not e1,
    )
    return StepState(x=x_new, x_prev=x, k=state.k + 1), rec


def pc1_bp_step(state, problem, config, lam, v, beta=None):
    """PC I applied at the displaced point ``x + lam v``."""
    w = state.x + lam * v
    st, rec = _pc_at(w, state, problem, config, projected=False, beta=beta)
    rec.perturbation_norms = (float(lam * np.linalg.norm(v)), 0.0)
    return st, rec


def pc2_bp_step(state, problem, config, lam, v, beta=None):
    """PC II applied at the displaced point ``x + lam v``."""
    w = state.x + lam * v
    st, rec = _pc_at(w, state, problem, config, projected=True, beta=beta)
    rec.perturbation_norms = (float(lam * np.linalg.norm(v)), 0.0)
    return st, rec


def ipc1_1_step(state, problem, config, alpha1, alpha2, beta=None):
    """Inertial PC I built from the outer-perturbation form (iPC I-1)."""
    delta = _displacement(state)
    st, rec = pc1_op_step(state, problem, config, alpha1 * delta, alpha2 * delta, beta=beta)
    rec.alpha = float(alpha1)
    return st, rec


def ipc2_1_step(state, problem, config, alpha1, alpha2, beta=None):
    """Inertial PC II built from the outer-perturbation form (iPC II-1).

    ``alpha1`` is shrunk when ``alpha1 ||x - x_prev|| <= mu ||x - y||`` fails;
    the record carries the effective weight and ``alpha_shrunk``.
    """
    delta = _displacement(state)
    st, rec = pc2_op_step(state, problem, config, alpha1 * delta, alpha2 * delta, beta=beta)
    alpha_eff = float(alpha1)
    if rec.alpha_shrunk:
        dn = float(np.linalg.norm(delta))
        alpha_eff = rec.perturbation_norms[0] / dn if dn > 0 else 0.0
    rec.alpha = alpha_eff
    return st, rec


def ipc1_2_step(state, problem, config, alpha, beta=None):
    """Inertial PC I via extrapolation ``w = x + alpha (x - x_prev)`` (iPC I-2)."""
    w = state.x + alpha * _displacement(state)
    st, rec = _pc_at(w, state, problem, config, projected=False, beta=beta)
    rec.alpha = float(alpha)
    return st, rec


def ipc2_2_step(state, problem, config, alpha, beta=None):
    """Inertial PC II via extrapolation (iPC II-2)."""
    w = state.x + alpha * _displacement(state)
    st, rec = _pc_at(w, state, problem, config, projected=True, beta=beta)
    rec.alpha = float(alpha)
    return st, rec


def check_remark56(config, alpha_const, sigma_r, delta_r):
    """Raise ``ConfigurationError`` unless gamma respects the constant-inertia cap."""
    if sigma_r is None or delta_r is None:
        raise ConfigurationError("constant-inertia iPC I needs an admissible (sigma, delta) pair")
    gamma_max = validate_remark56(alpha_const, sigma_r, delta_r)
    if config.gamma > gamma_max:
        raise ConfigurationError(
            f"gamma={config.gamma:g} exceeds the admissible cap {gamma_max:.6g} "
            f"for alpha={alpha_const:g}, sigma={sigma_r:g}, delta={delta_r:g}"
        )
    return gamma_max


def ipc1_remark56_step(state, problem, config, alpha_const, sigma_r, delta_r, beta=None):
    """iPC I-2 with constant inertia ``alpha_const`` (zero on the first step)."""
    check_remark56(config, alpha_const, sigma_r, delta_r)
    alpha = 0.0 if state.k == 0 else alpha_const
    return ipc1_2_step(state, problem, config, alpha, beta=beta)


# -- registry ------------------------------------------------------------------------


def _inertial_weights(state, schedule):
    if schedule.kind == "none" or state.x_prev is None or state.k < 1:
        return 0.0, 0.0
    dn = float(np.linalg.norm(state.x - state.x_prev))
    z1, z2 = schedule.zetas
    a1, a2 = schedule.alpha_targets
    return (
        inertial_alpha(state.k, a1, dn, z1, schedule.xi),
        inertial_alpha(state.k, a2, dn, z2, schedule.xi),
    )


def _adv_plain(step):
    def advance(state, problem, config, schedule):
        return step(state, problem, config)

    return advance


def _adv_outer(step):
    def advance(state, problem, config, schedule):
        e1, e2 = outer_at(schedule, state.k, state.x)
        return step(state, problem, config, e1, e2)

    return advance


def _adv_bounded(step):
    def advance(state, problem, config, schedule):
        lam, v = bounded_at(schedule, state.k, problem.dim)
        return step(state, problem, config, lam, v)

    return advance


def _adv_inertial_pair(step):
    def advance(state, problem, config, schedule):
        a1, a2 = _inertial_weights(state, schedule)
        return step(state, problem, config, a1, a2)

    return advance


def _adv_inertial_single(step):
    def advance(state, problem, config, schedule):
        a1, _ = _inertial_weights(state, schedule)
        return step(state, problem, config, a1)

    return advance


def _adv_remark56(state, problem, config, schedule):
    alpha = schedule.alpha_targets[0] if schedule.kind == "inertial" else 0.0
    return ipc1_remark56_step(state, problem, config, alpha, schedule.sigma_r, schedule.delta_r)


@dataclass(frozen=True)
class Algorithm:
    id: str
    name: str
    family: str
    inputs: str
    advance: Callable
    rho_bound: Optional[str]
    default_schedule: Callable[[], PerturbationSchedule]

    def validate(self, config, schedule):
        allowed = {"none", self.inputs if self.inputs != "remark56" else "inertial"}
        if schedule.kind not in allowed:
            raise ConfigurationError(
                f"algorithm {self.id!r} takes a {self.inputs!r} schedule, got {schedule.kind!r}"
            )
        if self.inputs == "remark56":
            if schedule.kind == "none":
                raise ConfigurationError("ipc1-r56 requires an inertial schedule with sigma_r and delta_r")
            check_remark56(config, schedule.alpha_targets[0], schedule.sigma_r, schedule.delta_r)


def _none():
    return PerturbationSchedule.none()


ALGORITHMS = {
    a.id: a
    for a in [
        Algorithm("eg", "Extragradient", "eg", "none", _adv_plain(extragradient_step), None, _none),
        Algorithm("pc1", "PC I", "pc1", "none", _adv_plain(pc1_step), "pc1", _none),
        Algorithm("pc2", "PC II", "pc2", "none", _adv_plain(pc2_step), "pc1", _none),
        Algorithm("pc1-op", "PC I-OP", "pc1", "outer", _adv_outer(pc1_op_step), "pc1",
                  PerturbationSchedule.outer),
        Algorithm("pc2-op", "PC II-OP", "pc2", "outer", _adv_outer(pc2_op_step), "pc2",
                  PerturbationSchedule.outer),
        Algorithm("pc1-bp", "PC I-BP", "pc1", "bounded", _adv_bounded(pc1_bp_step), "pc1",
                  PerturbationSchedule.bounded),
        Algorithm("pc2-bp", "PC II-BP", "pc2", "bounded", _adv_bounded(pc2_bp_step), "pc1",
                  PerturbationSchedule.bounded),
        Algorithm("ipc1-1", "iPC I-1", "pc1", "inertial", _adv_inertial_pair(ipc1_1_step), "pc1",
                  lambda: PerturbationSchedule.inertial(DEFAULT_ALPHA_OP)),
        Algorithm("ipc2-1", "iPC II-1", "pc2", "inertial", _adv_inertial_pair(ipc2_1_step), "pc2",
                  lambda: PerturbationSchedule.inertial(DEFAULT_ALPHA_OP)),
        Algorithm("ipc1-2", "iPC I-2", "pc1", "inertial", _adv_inertial_single(ipc1_2_step), "pc1",
                  lambda: PerturbationSchedule.inertial(DEFAULT_ALPHA_BP)),
        Algorithm("ipc2-2", "iPC II-2", "pc2", "inertial", _adv_inertial_single(ipc2_2_step), "pc1",
                  lambda: PerturbationSchedule.inertial(DEFAULT_ALPHA_BP)),
        Algorithm("ipc1-r56", "iPC I", "pc1", "remark56", _adv_remark56, "pc1",
                  lambda: PerturbationSchedule.inertial(DEFAULT_ALPHA_R56)),
    ]
}

ALGORITHM_IDS = tuple(ALGORITHMS)

# the seven methods compared in the sparse-recovery tables
TABLE_ALGORITHMS = ("pc1", "pc2", "ipc1-r56", "ipc1-1", "ipc1-2", "ipc2-1", "ipc2-2")


def get_algorithm(algorithm_id):
    try:
        return ALGORITHMS[algorithm_id]
    except KeyError:
        raise InputError(
            f"unknown algorithm {algorithm_id!r}; expected one of {', '.join(ALGORITHM_IDS)}"
        ) from None
