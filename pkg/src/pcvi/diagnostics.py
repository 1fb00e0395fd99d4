"""Post-hoc certificates computed from solve traces.

Nothing in here re-runs an algorithm: every check reads the recorded iterates
and compares them against a provable inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

RHO_TOL = 1e-10
RATE_TOL = 1e-8
FEJER_TOL = 1e-9


def rho_lower_bound_pc1(nu):
    """Lower bound ``(1 - nu) / (1 + nu^2)`` on the contraction factor."""
    if not 0 < nu < 1:
        raise InputError(f"nu must lie in (0, 1), got {nu}")
    return (1.0 - nu) / (1.0 + nu ** 2)


def rho_lower_bound_pc2(nu, mu):
    """Contraction-factor bound when the predictor carries an inner error
    ``||e1|| <= mu ||x - y||``."""
    if not 0 < nu < 1:
        raise InputError(f"nu must lie in (0, 1), got {nu}")
    if not 0 <= mu < 1 - nu:
        raise InputError(f"mu must lie in [0, 1 - nu), got {mu}")
    return (1.0 - nu - mu) / (1.0 + nu ** 2 + mu ** 2 + 2 * mu + 2 * nu * mu)


def _weighted(trace):
    recs = [r for r in trace if math.isfinite(r.rho) and math.isfinite(r.beta)]
    if not recs:
        raise InputError("ergodic average needs a nonempty trace with finite rho and beta")
    return recs, np.array([r.rho * r.beta for r in recs])


def ergodic_point(trace):
    """``(y_t, Upsilon_t)``: the rho*beta weighted mean of the feasible predictors."""
    recs, w = _weighted(trace)
    Y = np.array([r.y for r in recs])
    ups = float(w.sum())
    return w @ Y / ups, ups


def upsilon_series(trace):
    """Running sums ``Upsilon_t`` for t = 0, 1, ..."""
    _, w = _weighted(trace)
    return np.cumsum(w)


@dataclass
class RateCertificate:
    t: int
    y_t: np.ndarray
    Upsilon_t: float
    M_bound: float
    checks: list = field(default_factory=list)
    corrected_checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c[3] for c in self.checks) and all(c[3] for c in self.corrected_checks)

    @property
    def rhs_scale(self):
        return 1.0 / (2.0 * self.Upsilon_t)


def rate_certificate(trace, problem, x0, gamma, x_samples, t=None, M_bound=None):
    """Evaluate the ergodic O(1/t) gap bound at each feasible sample ``x``.

    Checks ``<F(x), y_t - x> <= (||x - x0||^2 + 2M) / (2 gamma Upsilon_t)``
    with ``y_t`` the ergodic mean of the first ``t + 1`` feasible predictors.
    ``M`` is computed per sample as ``max_k ||x^{k+1} - x|| * sum_k ||e2^k||``
    unless ``M_bound`` is given (it is zero for unperturbed runs).

    When the trace carries predictor errors ``e1`` the bound for the
    perturbed average, with the extra ``||F(x)|| sum rho beta ||e1|| / Upsilon``
    term, is evaluated too (``corrected_checks``).
    """
    if t is None:
        t = len(trace) - 1
    if not 0 <= t < len(trace):
        raise InputError(f"t={t} outside the trace (length {len(trace)})")
    head = trace[: t + 1]
    y_t, ups = ergodic_point(head)
    e2_sum = sum(r.perturbation_norms[1] for r in head)
    has_e1 = any(r.e1 is not None and np.any(r.e1 != 0) for r in head)
    if has_e1:
        w = np.array([r.rho * r.beta for r in head])
        e1_shift = sum(wk * r.e1 for wk, r in zip(w, head) if r.e1 is not None) / ups
        e1_term = float(sum(wk * np.linalg.norm(r.e1) for wk, r in zip(w, head) if r.e1 is not None)) / ups
    X = np.array([r.x for r in head])
    cert = RateCertificate(t=t, y_t=y_t, Upsilon_t=ups, M_bound=0.0)
    x0 = np.asarray(x0, dtype=float)
    worst_M = 0.0
    for xs in x_samples:
        xs = np.asarray(xs, dtype=float)
        if not problem.contains(xs):
            raise InputError("rate certificate samples must be feasible")
        if M_bound is None:
            M = float(np.max(np.linalg.norm(X - xs, axis=1))) * e2_sum if e2_sum > 0 else 0.0
        else:
            M = float(M_bound)
        worst_M = max(worst_M, M)
        Fx = problem.F(xs)
        rhs = (float(np.sum((xs - x0) ** 2)) + 2.0 * M) / (2.0 * gamma * ups)
        lhs = float(Fx @ (y_t - xs))
        cert.checks.append((xs, lhs, rhs, lhs <= rhs + RATE_TOL))
        if has_e1:
            lhs_c = float(Fx @ (y_t + e1_shift - xs))
            rhs_c = rhs + float(np.linalg.norm(Fx)) * e1_term
            cert.corrected_checks.append((xs, lhs_c, rhs_c, lhs_c <= rhs_c + RATE_TOL))
    cert.M_bound = worst_M
    return cert


def _iterates(trace, x0=None):
    """Pairs ``(x^k, anchor^k, x^{k+1}, record)``."""
    out = []
    for i, r in enumerate(trace):
        if r.x_start is not None:
            xk = r.x_start
        elif i == 0:
            if x0 is None:
                raise InputError("x0 is required for traces without x_start")
            xk = np.asarray(x0, dtype=float)
        else:
            xk = trace[i - 1].x
        anchor = r.anchor if r.anchor is not None else xk
        out.append((xk, anchor, r.x, r))
    return out


def fejer_audit(trace, x_star, gamma, form="contraction", x0=None):
    """Per-step slack of the distance-descent inequality towards ``x_star``.

    form="contraction"
        ``||x^{k+1} - x*||^2 <= ||w^k - x*||^2 - ((2 - gamma)/gamma) ||x^{k+1} - w^k||^2``
        with ``w^k`` the correction anchor (``x^k`` when unperturbed). Holds for
        the PC I update.
    form="projected"
        ``||x^{k+1} - x*||^2 <= ||w^k - x*||^2 - gamma (2 - gamma) rho_k^2 ||d_k||^2``;
        the form available for the projected (PC II) update.

    Returns a list of ``(k, slack)`` for the steps where
    ``slack < -1e-9 (1 + ||x^k||^2)``.
    """
    if form not in ("contraction", "projected"):
        raise InputError(f"unknown Fejer form {form!r}")
    x_star = np.asarray(x_star, dtype=float)
    c = (2.0 - gamma) / gamma
    violations = []
    for xk, w, xn, r in _iterates(trace, x0):
        lhs = float(np.sum((xn - x_star) ** 2))
        if form == "contraction":
            rhs = float(np.sum((w - x_star) ** 2)) - c * float(np.sum((xn - w) ** 2))
        else:
            rhs = float(np.sum((w - x_star) ** 2)) - gamma * (2.0 - gamma) * r.rho ** 2 * r.d_norm ** 2
        slack = rhs - lhs
        if not slack >= -FEJER_TOL * (1.0 + float(np.sum(xk ** 2))):
            violations.append((r.k, slack))
    return violations


def quasi_fejer_audit(trace, x_star, gamma, x0=None):
    """Check ``||x^{k+1} - x*||^2 <= (1 + ||e2^k||) ||x^k - x*||^2 + ((2 + gamma)/gamma) ||e2^k||``
    on an outer-perturbed PC I trace. Returns the violating ``(k, slack)`` pairs."""
    x_star = np.asarray(x_star, dtype=float)
    violations = []
    for xk, _, xn, r in _iterates(trace, x0):
        e2 = r.perturbation_norms[1]
        lhs = float(np.sum((xn - x_star) ** 2))
        rhs = (1.0 + e2) * float(np.sum((xk - x_star) ** 2)) + (2.0 + gamma) / gamma * e2
        slack = rhs - lhs
        if not slack >= -FEJER_TOL * (1.0 + float(np.sum(xk ** 2))):
            violations.append((r.k, slack))
    return violations


def monotonicity_probe(F, dim, n_pairs=1000, seed=0, scale=1.0):
    """Smallest ``<F(x) - F(y), x - y>`` over seeded random pairs.

    A value below ``-1e-10`` is a certificate of non-monotonicity.
    """
    if n_pairs < 1:
        raise InputError("n_pairs must be positive")
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_pairs):
        x = scale * rng.standard_normal(dim)
        y = scale * rng.standard_normal(dim)
        worst = min(worst, float((F(x) - F(y)) @ (x - y)))
    return worst


def rho_bound_for(algorithm_id, config):
    """The contraction-factor lower bound that applies to ``algorithm_id``."""
    from .algorithms import get_algorithm

    kind = get_algorithm(algorithm_id).rho_bound
    if kind == "pc1":
        return rho_lower_bound_pc1(config.nu)
    if kind == "pc2":
        return rho_lower_bound_pc2(config.nu, config.mu_effective)
    return None


def audit_report(report):
    """Built-in trace audits attached to every :class:`SolveReport`.

    Each entry is ``(name, passed, worst_violation)``.
    """
    audits = []
    trace = report.trace
    ks = [r.k for r in trace]
    audits.append(("trace_gap_free", ks == list(range(len(trace))), 0.0))

    bound = rho_bound_for(report.algorithm, report.config)
    if bound is not None and trace:
        worst = min(r.rho for r in trace) - bound
        audits.append(("rho_lower_bound", worst >= -RHO_TOL, min(worst, 0.0)))

    if trace and report.status.value == "Converged":
        last = trace[-1].residual
        audits.append(("converged_residual", last <= report.config.epsilon, max(last - report.config.epsilon, 0.0)))

    if trace:
        ups = upsilon_series(trace)
        incr = bool(np.all(np.diff(ups) > 0)) if ups.size > 1 else True
        _, w = _weighted(trace)
        lin = bool(np.all(ups >= np.arange(1, ups.size + 1) * w.min() * (1 - 1e-12)))
        audits.append(("upsilon_growth", incr and lin, 0.0))
    return audits
