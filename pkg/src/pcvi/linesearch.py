"""Geometric backtracking for the step size beta_k."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, StepSizeFailure

BLOCK = 24
# relative slack before a screened trial is declared failed
SCREEN_MARGIN = 1e-9


@dataclass(frozen=True)
class LineSearchParams:
    sigma: float = 5.0
    backtrack: float = 0.9
    nu: float = 0.7
    max_backtracks: int = 100

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError("sigma must be positive")
        if not 0 < self.backtrack < 1:
            raise ConfigurationError("backtrack factor must lie in (0, 1)")
        if not 0 < self.nu < 1:
            raise ConfigurationError("nu must lie in (0, 1)")
        if int(self.max_backtracks) < 1:
            raise ConfigurationError("max_backtracks must be positive")

    @classmethod
    def from_config(cls, config):
        return cls(
            sigma=config.sigma_ls,
            backtrack=config.rho_ls,
            nu=config.nu,
            max_backtracks=config.max_backtracks,
        )

    def trial(self, m):
        return self.sigma * self.backtrack ** m


class LineSearchResult(NamedTuple):
    beta: float
    y: np.ndarray
    trials: int
    degenerate: bool = False


def backtrack_beta(x, problem, params, Fx=None, shift=None):
    """Largest ``beta = sigma * backtrack**m`` (m = 0, 1, ...) with
    ``beta * ||F(x) - F(y)|| <= nu * ||x - y||``, where
    ``y = P_C(x - beta * F(x) + shift)``.

    ``shift`` is the inner perturbation of the projected variants; leave it
    ``None`` for the plain predictor. When ``y`` coincides with ``x`` the
    current trial is returned with ``degenerate=True``.

    If the problem provides ``F_batch`` and ``project_C_batch`` the trials are
    evaluated in blocks; the accepted ``m`` is still the first one that passes.

    Returns
    -------
    LineSearchResult
        ``(beta, y, trials, degenerate)``; ``trials`` is the accepted exponent m.
    """
    x = np.asarray(x, dtype=float)
    if Fx is None:
        Fx = problem.F(x)
    if problem.F_batch is not None and problem.project_C_batch is not None:
        return _backtrack_blocked(x, Fx, problem, params, shift)
    for m in range(int(params.max_backtracks) + 1):
        beta = params.trial(m)
        z = x - beta * Fx
        if shift is not None:
            z = z + shift
        y = problem.project_C(z)
        gap = np.linalg.norm(x - y)
        if gap == 0.0:
            return LineSearchResult(beta, y, m, True)
        if beta * np.linalg.norm(Fx - problem.F(y)) <= params.nu * gap:
            return LineSearchResult(beta, y, m, False)
    _fail(params)


def _backtrack_blocked(x, Fx, problem, params, shift):
    last = int(params.max_backtracks)
    for m0 in range(0, last + 1, BLOCK):
        ms = range(m0, min(m0 + BLOCK, last + 1))
        betas = np.array([params.trial(m) for m in ms])
        Z = x[None, :] - betas[:, None] * Fx[None, :]
        if shift is not None:
            Z = Z + shift[None, :]
        Y = problem.project_C_batch(Z)
        gaps = np.linalg.norm(x[None, :] - Y, axis=1)
        # first degenerate trial ends the search once earlier ones have failed
        stop = np.flatnonzero(gaps == 0.0)
        n = stop[0] + 1 if stop.size else len(ms)
        live = np.arange(n)
        if problem.pairing_batch is not None:
            pair = problem.pairing_batch(x, Y[:n])
            doomed = betas[:n] * pair > params.nu * gaps[:n] ** 2 * (1 + SCREEN_MARGIN)
            live = live[~doomed | (gaps[:n] == 0.0)]
        lhs = np.full(n, np.inf)
        rows = live[gaps[live] > 0.0]
        if rows.size:
            lhs[rows] = betas[rows] * np.linalg.norm(Fx[None, :] - problem.F_batch(Y[rows]), axis=1)
        for i in live:
            m = ms[i]
            if gaps[i] == 0.0:
                return LineSearchResult(betas[i], Y[i].copy(), m, True)
            if lhs[i] <= params.nu * gaps[i]:
                return LineSearchResult(betas[i], Y[i].copy(), m, False)
    _fail(params)


def _fail(params):
    raise StepSizeFailure(
        f"step condition unmet after {params.max_backtracks} backtracks "
        f"(last beta={params.trial(params.max_backtracks):.3e}); "
        "F may not be Lipschitz on this region"
    )


def expected_trials(sigma, backtrack, nu, L):
    """Backtracks needed for ``F = L * (orthogonal map)`` on the full space."""
    if sigma * L <= nu:
        return 0
    return int(np.ceil(np.log(nu / (sigma * L)) / np.log(backtrack)))
