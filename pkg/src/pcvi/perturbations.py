"""Perturbation sources: outer errors, bounded displacements and inertial weights.

Every stream is a pure function of ``(seed, k)`` so two solves with the same
schedule see identical perturbations, and nothing has to be advanced in order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, InputError

BASEL = math.pi ** 2 / 6.0

SCHEDULE_KINDS = ("none", "outer", "bounded", "inertial")


def unit_direction(seed, k, stream, dim):
    """Seeded direction uniform on the unit sphere in R^dim."""
    rng = np.random.default_rng([int(seed), int(k), int(stream)])
    u = rng.standard_normal(dim)
    nrm = np.linalg.norm(u)
    while nrm == 0.0:
        u = rng.standard_normal(dim)
        nrm = np.linalg.norm(u)
    return u / nrm


@dataclass(frozen=True)
class PerturbationSchedule:
    """Declarative perturbation source for one solve.

    kind
        ``"none"``, ``"outer"`` (errors e1/e2 with norms ``budget / (BASEL (k+1)^2)``,
        so the series sums to at most ``budget``), ``"bounded"`` (pairs
        ``(lambda_k, v^k)`` with ``lambda_k = lambda_scale / (k+1)^2`` and unit
        ``v^k``) or ``"inertial"`` (online-capped inertial weights).

    User hooks ``gen1``/``gen2`` (outer), ``v_gen``/``lambda_seq`` (bounded)
    take ``(k, x)`` resp. ``k`` and override the seeded defaults; a hook is
    responsible for its own summability.
    """

    kind: str = "none"
    seed: int = 0
    budget: float = 1.0
    lambda_scale: float = 1.0
    alpha_targets: tuple = (0.4, 0.4)
    zeta: Optional[tuple] = None
    xi: float = 1.0
    sigma_r: Optional[float] = None
    delta_r: Optional[float] = None
    gen1: Optional[Callable] = field(default=None, compare=False)
    gen2: Optional[Callable] = field(default=None, compare=False)
    v_gen: Optional[Callable] = field(default=None, compare=False)
    lambda_seq: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InputError(f"unknown schedule kind {self.kind!r}")
        if not self.budget > 0 or not self.lambda_scale >= 0:
            raise ConfigurationError("budget must be positive and lambda_scale nonnegative")
        if any(not 0 <= a <= 1 for a in self.alpha_targets):
            raise ConfigurationError("inertial targets must lie in [0, 1]")
        if not self.xi > 0:
            raise ConfigurationError("xi must be positive")
        if self.zeta is not None and any(not z > 0 for z in self.zeta):
            raise ConfigurationError("zeta must be positive")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def outer(cls, budget=1.0, seed=0, gen1=None, gen2=None):
        return cls("outer", seed=seed, budget=budget, gen1=gen1, gen2=gen2)

    @classmethod
    def bounded(cls, lambda_scale=1.0, seed=0, v_gen=None, lambda_seq=None):
        return cls("bounded", seed=seed, lambda_scale=lambda_scale, v_gen=v_gen, lambda_seq=lambda_seq)

    @classmethod
    def inertial(cls, alpha1=0.4, alpha2=None, zeta=None, xi=1.0, sigma_r=None, delta_r=None):
        """Inertial schedule; ``zeta`` defaults to the targets themselves."""
        alpha2 = alpha1 if alpha2 is None else alpha2
        if zeta is not None and np.isscalar(zeta):
            zeta = (float(zeta), float(zeta))
        return cls(
            "inertial",
            alpha_targets=(float(alpha1), float(alpha2)),
            zeta=zeta,
            xi=xi,
            sigma_r=sigma_r,
            delta_r=delta_r,
        )

    @property
    def zetas(self):
        return self.zeta if self.zeta is not None else self.alpha_targets

    def to_dict(self):
        return {
            "kind": self.kind,
            "seed": self.seed,
            "budget": self.budget,
            "lambda_scale": self.lambda_scale,
            "alpha_targets": list(self.alpha_targets),
            "zeta": list(self.zetas),
            "xi": self.xi,
            "sigma_r": self.sigma_r,
            "delta_r": self.delta_r,
        }


def outer_weight(budget, k):
    return budget / (BASEL * (k + 1) ** 2)


def outer_at(schedule, k, x):
    """Outer errors ``(e1, e2)`` for iteration ``k`` at iterate ``x``."""
    x = np.asarray(x)
    if schedule.kind == "none":
        z = np.zeros_like(x, dtype=float)
        return z, z.copy()
    if schedule.kind != "outer":
        raise InputError(f"outer_at needs an outer schedule, got {schedule.kind!r}")
    w = outer_weight(schedule.budget, k)
    if schedule.gen1 is not None:
        e1 = np.asarray(schedule.gen1(k, x), dtype=float)
    else:
        e1 = w * unit_direction(schedule.seed, k, 1, x.size)
    if schedule.gen2 is not None:
        e2 = np.asarray(schedule.gen2(k, x), dtype=float)
    else:
        e2 = w * unit_direction(schedule.seed, k, 2, x.size)
    return e1, e2


def bounded_at(schedule, k, dim=None):
    """Bounded perturbation pair ``(lambda_k, v^k)`` with ``||v^k|| <= 1``."""
    if schedule.kind == "none":
        return 0.0, (None if dim is None else np.zeros(dim))
    if schedule.kind != "bounded":
        raise InputError(f"bounded_at needs a bounded schedule, got {schedule.kind!r}")
    if schedule.lambda_seq is not None:
        lam = float(schedule.lambda_seq(k))
    else:
        lam = schedule.lambda_scale / (k + 1) ** 2
    if lam < 0:
        raise InputError("lambda_k must be nonnegative")
    if schedule.v_gen is not None:
        v = np.asarray(schedule.v_gen(k), dtype=float)
    elif dim is None:
        raise InputError("dim is required for the seeded direction generator")
    else:
        v = unit_direction(schedule.seed, k, 3, dim)
    return lam, v


def inertial_alpha(k, alpha_target, delta_norm, zeta, xi):
    """Online-capped inertial weight ``min(alpha, zeta / (k^(1+xi) * ||x^k - x^{k-1}||))``.

    The cap keeps ``sum_k alpha_k ||x^k - x^{k-1}||`` finite; with zero
    displacement it never binds.
    """
    if k < 1:
        raise InputError("inertial weights are defined for k >= 1")
    if delta_norm < 0:
        raise InputError("delta_norm must be nonnegative")
    if delta_norm == 0.0:
        return float(alpha_target)
    cap = zeta / (k ** (1.0 + xi) * delta_norm)
    return float(min(alpha_target, cap))


def validate_remark56(alpha, sigma_r, delta_r):
    """Check the constant-inertia admissibility conditions; return the gamma cap.

    Requires ``delta > (alpha^2 (1+alpha) + alpha sigma) / (1 - alpha^2)`` and
    returns ``2 [delta - alpha((1+alpha) + alpha delta + sigma)] /
    (delta [1 + alpha(1+alpha) + alpha delta + sigma])``.
    """
    if not 0 <= alpha < 1:
        raise ConfigurationError(f"alpha must lie in [0, 1), got {alpha}")
    if not sigma_r > 0 or not delta_r > 0:
        raise ConfigurationError("sigma and delta must be positive")
    delta_min = (alpha ** 2 * (1 + alpha) + alpha * sigma_r) / (1 - alpha ** 2)
    if not delta_r > delta_min:
        raise ConfigurationError(
            f"delta inequality violated: need delta > {delta_min:.6g}, got {delta_r:g}"
        )
    num = 2.0 * (delta_r - alpha * ((1 + alpha) + alpha * delta_r + sigma_r))
    den = delta_r * (1 + alpha * (1 + alpha) + alpha * delta_r + sigma_r)
    gamma_max = num / den
    if not gamma_max > 0:
        raise ConfigurationError(f"gamma cap is nonpositive ({gamma_max:.6g}) for this (alpha, sigma, delta)")
    return gamma_max


def best_remark56(alpha, sigma_r=1e-6):
    """Delta maximizing the gamma cap for fixed ``(alpha, sigma_r)``.

    Returns ``(delta, gamma_max)``. Useful for picking a triple to put in a
    configuration file.
    """
    from scipy.optimize import minimize_scalar

    a, s = alpha, sigma_r
    lo = (a ** 2 * (1 + a) + a * s) / (1 - a ** 2)

    def neg_cap(d):
        return -2.0 * (d - a * ((1 + a) + a * d + s)) / (d * (1 + a * (1 + a) + a * d + s))

    res = minimize_scalar(neg_cap, bounds=(lo * (1 + 1e-9) + 1e-12, lo * 100 + 100), method="bounded")
    return float(res.x), validate_remark56(alpha, sigma_r, float(res.x))
