"""Brute-force references used to check the main code paths.

This module deliberately imports nothing from ``projections``, ``linesearch``
or ``algorithms``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, OracleError

MINTY_TOL = 1e-8


@dataclass(frozen=True)
class OracleConfig:
    tol: float = 1e-12
    max_iter: int = 10_000_000
    step_scale: float = 0.1
    minty_samples: int = 1000
    seed: int = 12345

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("oracle tol must be positive")
        if not 0 < self.step_scale <= 1:
            raise InputError("step_scale must lie in (0, 1]")


def oracle_project_l1(v, t, cfg=None):
    """l1-ball projection by bisection on the shrinkage threshold."""
    cfg = cfg or OracleConfig()
    if not t > 0:
        raise InputError("radius must be positive")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= t:
        return v.copy()
    lo, hi = 0.0, float(a.max())
    theta = 0.5 * (lo + hi)
    while hi - lo > 0:
        theta = 0.5 * (lo + hi)
        if theta <= lo or theta >= hi:
            break
        excess = np.maximum(a - theta, 0.0).sum() - t
        if abs(excess) <= cfg.tol:
            break
        if excess > 0:
            lo = theta
        else:
            hi = theta
    return np.sign(v) * np.maximum(a - theta, 0.0)


def estimate_lipschitz(F, dim, seed=0, n_probes=20):
    """Crude Lipschitz estimate from random secants (affine maps: exact up to sampling)."""
    rng = np.random.default_rng(seed)
    best = 0.0
    x = rng.standard_normal(dim)
    Fx = F(x)
    for _ in range(n_probes):
        y = rng.standard_normal(dim)
        best = max(best, np.linalg.norm(F(y) - Fx) / np.linalg.norm(y - x))
    return best


def minty_violation(problem, x_star, n_samples=1000, seed=0, scale=None):
    """Smallest ``<F(x), x - x*>`` over random feasible ``x``."""
    rng = np.random.default_rng(seed)
    x_star = np.asarray(x_star, dtype=float)
    if scale is None:
        scale = 1.0 + np.linalg.norm(x_star)
    worst = np.inf
    for i in range(n_samples):
        # mix far samples with ones near x* where the check is sharpest
        r = scale if i % 2 == 0 else 1e-3 * scale
        x = problem.project_C(x_star + r * rng.standard_normal(problem.dim))
        worst = min(worst, float(problem.F(x) @ (x - x_star)))
    return worst


def oracle_solve_vi(problem, cfg=None, x0=None, L=None):
    """Solve a small monotone VI by long-horizon extragradient with a fixed short step.

    The result is accepted only if ``<F(x), x - x*> >= -1e-8`` on random feasible
    samples (Minty characterization).
    """
    cfg = cfg or OracleConfig()
    if problem.dim > 50:
        raise InputError("oracle is limited to dim <= 50")
    if L is None:
        L = problem.lipschitz_hint or estimate_lipschitz(problem.F, problem.dim, seed=cfg.seed)
    if L <= 0:
        L = 1.0
    step = cfg.step_scale / L
    F, P = problem.F, problem.project_C
    x = P(np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=float))
    for _ in range(int(cfg.max_iter)):
        y = P(x - step * F(x))
        x_new = P(x - step * F(y))
        res = np.linalg.norm(x_new - x)
        x = x_new
        if res <= cfg.tol:
            break
    else:
        raise OracleError(f"extragradient oracle did not reach tol {cfg.tol:g}")
    worst = minty_violation(problem, x, cfg.minty_samples, seed=cfg.seed)
    if worst < -MINTY_TOL:
        raise OracleError(f"Minty validation failed (worst {worst:.3e})")
    return x
