"""Problem, configuration and trace types plus the generic iteration driver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DegenerateStep, InputError, NumericalDivergence


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DEGENERATE_STEP = "DegenerateStep"
    AUDIT_FAILURE = "AuditFailure"


@dataclass(frozen=True)
class VIProblem:
    """Monotone VI: find x* in C with <F(x*), x - x*> >= 0 for all x in C.

    ``membership_C`` defaults to a check that ``x`` is (numerically) fixed by
    ``project_C``. ``objective`` is optional and only used for reporting.
    ``F_batch`` / ``project_C_batch`` optionally map a stack of row vectors at
    once; the backtracking search uses them to evaluate trial steps in blocks.
    ``pairing_batch(x, Y)``, if given, returns ``<F(x) - F(y_i), x - y_i>`` for
    each row; by Cauchy-Schwarz it lets the search discard trials that must
    fail without evaluating ``F_batch`` on them.
    """

    dim: int
    F: Callable[[np.ndarray], np.ndarray]
    project_C: Callable[[np.ndarray], np.ndarray]
    membership_C: Optional[Callable[[np.ndarray], bool]] = None
    lipschitz_hint: Optional[float] = None
    objective: Optional[Callable[[np.ndarray], float]] = None
    F_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    project_C_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    pairing_batch: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InputError("dim must be a positive integer")
        if self.lipschitz_hint is not None and self.lipschitz_hint < 0:
            raise InputError("lipschitz_hint must be nonnegative")

    def contains(self, x):
        if self.membership_C is not None:
            return bool(self.membership_C(x))
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(self.project_C(x) - x) <= 1e-9 * (1.0 + np.linalg.norm(x))

    @classmethod
    def from_spec(cls, F, spec, **kwargs):
        """Build a problem whose feasible set is a :class:`ProjectorSpec`."""
        return cls(dim=spec.dim, F=F, project_C=spec.project, membership_C=spec.contains, **kwargs)


@dataclass(frozen=True)
class SolverConfig:
    """Step-size, relaxation and stopping parameters.

    Defaults follow the sparse-recovery experiments: trial step 5, backtracking
    factor 0.9, step-condition constant 0.7 and unit relaxation.
    ``mu`` bounds the inner perturbation of the projected (PC II) variants;
    ``None`` resolves to ``0.99 * min(nu, 1 - nu)``. Setting ``fixed_beta``
    bypasses the backtracking search (the step condition is then the caller's
    responsibility).
    """

    gamma: float = 1.0
    nu: float = 0.7
    mu: Optional[float] = None
    sigma_ls: float = 5.0
    rho_ls: float = 0.9
    epsilon: float = 1e-6
    max_iter: int = 10_000
    degenerate_tol: Optional[float] = None
    max_backtracks: int = 100
    fixed_beta: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma < 2:
            raise ConfigurationError(f"gamma must lie in (0, 2), got {self.gamma}")
        if not 0 < self.nu < 1:
            raise ConfigurationError(f"nu must lie in (0, 1), got {self.nu}")
        if not 0 < self.rho_ls < 1:
            raise ConfigurationError(f"rho_ls must lie in (0, 1), got {self.rho_ls}")
        if not self.sigma_ls > 0:
            raise ConfigurationError("sigma_ls must be positive")
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if int(self.max_iter) < 1 or int(self.max_backtracks) < 1:
            raise ConfigurationError("max_iter and max_backtracks must be positive")
        if self.fixed_beta is not None and not self.fixed_beta > 0:
            raise ConfigurationError("fixed_beta must be positive")
        if self.degenerate_tol is not None and not self.degenerate_tol > 0:
            raise ConfigurationError("degenerate_tol must be positive")
        if self.mu is not None and not 0 <= self.mu < 1 - self.nu:
            raise ConfigurationError(f"mu must lie in [0, 1 - nu) = [0, {1 - self.nu:g}), got {self.mu}")

    @property
    def mu_effective(self):
        if self.mu is not None:
            return self.mu
        return 0.99 * min(self.nu, 1.0 - self.nu)

    def degenerate_threshold(self, x):
        if self.degenerate_tol is not None:
            return self.degenerate_tol
        return 1e-14 * (1.0 + float(np.linalg.norm(x)))


@dataclass
class IterationRecord:
    """Snapshot of one step ``x^k -> x^{k+1}``.

    ``x`` is the new iterate and ``y`` the feasible predictor that enters the
    ergodic average. ``anchor`` is the point the correction starts from
    (``x^k`` or its displaced/extrapolated version) and ``x_start`` is ``x^k``;
    both are references to existing arrays, not copies.
    """

    k: int
    x: np.ndarray
    y: np.ndarray
    beta: float
    rho: float
    residual: float
    alpha: float = 0.0
    objective: Optional[float] = None
    perturbation_norms: tuple = (0.0, 0.0)
    d_norm: float = math.nan
    trials: int = 0
    x_start: Optional[np.ndarray] = None
    anchor: Optional[np.ndarray] = None
    e1: Optional[np.ndarray] = None
    alpha_shrunk: bool = False


@dataclass
class SolveReport:
    status: Status
    x_final: np.ndarray
    trace: list
    algorithm: str
    config: SolverConfig
    x0: np.ndarray
    ergodic: Optional[tuple] = None
    audits: list = field(default_factory=list)

    @property
    def converged(self):
        """True for both a met stopping rule and a vanished direction."""
        return self.status in (Status.CONVERGED, Status.DEGENERATE_STEP)

    @property
    def iterations(self):
        return len(self.trace)

    @property
    def min_rho(self):
        rhos = [r.rho for r in self.trace if math.isfinite(r.rho)]
        return min(rhos) if rhos else math.nan

    @property
    def audits_passed(self):
        return all(a[1] for a in self.audits)


@dataclass
class StepState:
    x: np.ndarray
    x_prev: Optional[np.ndarray] = None
    k: int = 0


def residual(x_prev, x_next):
    """Stopping quantity ``||x^{k+1} - x^k||``."""
    x_prev = np.asarray(x_prev, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    if x_prev.shape != x_next.shape:
        raise InputError(f"shape mismatch: {x_prev.shape} vs {x_next.shape}")
    return float(np.linalg.norm(x_next - x_prev))


def solve(problem, algorithm, config=None, schedules=None, x0=None, audit=True):
    """Iterate one registered algorithm until the stopping rule fires.

    Parameters
    ----------
    problem : VIProblem
    algorithm : str
        One of :data:`pcvi.algorithms.ALGORITHM_IDS`.
    config : SolverConfig, optional
    schedules : PerturbationSchedule, optional
        Perturbation / inertia source. Defaults to no perturbation, or to the
        experiment defaults for the inertial algorithms.
    x0 : array_like, optional
        Starting point, zero by default.
    audit : bool
        Run the trace audits and downgrade the status to ``AuditFailure`` if
        one of them fails.

    Returns
    -------
    SolveReport
    """
    from . import algorithms, diagnostics

    config = config or SolverConfig()
    algo = algorithms.get_algorithm(algorithm)
    if schedules is None:
        schedules = algo.default_schedule()
    algo.validate(config, schedules)
    x0 = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
    if x0.shape != (problem.dim,):
        raise InputError(f"x0 must have length {problem.dim}, got shape {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise NumericalDivergence(0, "x0 is not finite")

    state = StepState(x=x0, x_prev=None, k=0)
    trace = []
    status = Status.MAX_ITERATIONS
    for k in range(int(config.max_iter)):
        state.k = k
        try:
            state, rec = algo.advance(state, problem, config, schedules)
        except DegenerateStep:
            status = Status.DEGENERATE_STEP
            break
        if not (np.all(np.isfinite(rec.x)) and math.isfinite(rec.residual)):
            raise NumericalDivergence(k)
        if problem.objective is not None:
            rec.objective = float(problem.objective(rec.x))
        trace.append(rec)
        if rec.residual <= config.epsilon:
            status = Status.CONVERGED
            break

    report = SolveReport(
        status=status,
        x_final=state.x,
        trace=trace,
        algorithm=algo.id,
        config=config,
        x0=x0,
    )
    if trace:
        report.ergodic = diagnostics.ergodic_point(trace)
    if audit:
        report.audits = diagnostics.audit_report(report)
        if not report.audits_passed:
            report.status = Status.AUDIT_FAILURE
    return report
