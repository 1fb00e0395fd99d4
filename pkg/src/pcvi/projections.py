"""Euclidean projectors onto the closed convex sets used as VI feasible sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

KINDS = ("l1ball", "box", "ball", "halfspace", "full")

MEMBERSHIP_RTOL = 1e-9


def project_l1_ball(v, t):
    """Project ``v`` onto ``{x : ||x||_1 <= t}``.

    Sort-based soft thresholding: when ``v`` lies outside the ball, find the
    threshold ``theta >= 0`` with ``sum(max(|v_i| - theta, 0)) == t`` and shrink
    every coordinate towards zero by ``theta``.

    Parameters
    ----------
    v : array_like, shape (n,)
    t : float
        Radius, must be positive.

    Returns
    -------
    ndarray, shape (n,)
    """
    if not t > 0:
        raise InputError(f"l1-ball radius must be positive, got {t!r}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= t:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    # largest j with u_j > (css_j - t) / j
    active = np.nonzero(u * j > css - t)[0]
    r = active[-1]
    theta = (css[r] - t) / (r + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_l1_ball_rows(V, t):
    """Row-wise :func:`project_l1_ball` for a 2-d array ``V`` (same bits per row)."""
    if not t > 0:
        raise InputError(f"l1-ball radius must be positive, got {t!r}")
    V = np.asarray(V, dtype=float)
    a = np.abs(V)
    inside = a.sum(axis=1) <= t
    u = -np.sort(-a, axis=1)
    css = np.cumsum(u, axis=1)
    j = np.arange(1, V.shape[1] + 1)
    active = u * j > css - t
    # last active position per row
    r = V.shape[1] - 1 - np.argmax(active[:, ::-1], axis=1)
    theta = (css[np.arange(V.shape[0]), r] - t) / (r + 1.0)
    out = np.sign(V) * np.maximum(a - theta[:, None], 0.0)
    out[inside] = V[inside]
    return out


def project_box(v, lo, hi):
    return np.minimum(np.maximum(np.asarray(v, dtype=float), lo), hi)


def project_ball(v, center, r):
    v = np.asarray(v, dtype=float)
    diff = v - center
    dist = np.linalg.norm(diff)
    if dist <= r:
        return v.copy()
    return center + (r / dist) * diff


def project_halfspace(v, a, b):
    """Project onto ``{x : <a, x> <= b}``."""
    v = np.asarray(v, dtype=float)
    excess = a @ v - b
    if excess <= 0:
        return v.copy()
    return v - (excess / (a @ a)) * a


@dataclass(frozen=True)
class ProjectorSpec:
    """Declarative description of a feasible set.

    Build instances through the classmethods (``l1ball``, ``box``, ``ball``,
    ``halfspace``, ``full``) so the parameters are validated.
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown projector kind {self.kind!r}")
        if int(self.dim) < 1:
            raise InputError("dim must be a positive integer")
        p = self.params
        if self.kind == "l1ball" and not p["t"] > 0:
            raise InputError("l1-ball radius must be positive")
        if self.kind == "box" and np.any(p["lo"] > p["hi"]):
            raise InputError("box requires lo <= hi componentwise")
        if self.kind == "ball" and not p["r"] > 0:
            raise InputError("ball radius must be positive")
        if self.kind == "halfspace" and not np.any(p["a"] != 0):
            raise InputError("halfspace normal must be nonzero")

    @classmethod
    def l1ball(cls, t, dim):
        return cls("l1ball", dim, {"t": float(t)})

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InputError("box bounds must be 1-d arrays of equal length")
        return cls("box", lo.size, {"lo": lo, "hi": hi})

    @classmethod
    def ball(cls, center, r):
        center = np.asarray(center, dtype=float)
        return cls("ball", center.size, {"center": center, "r": float(r)})

    @classmethod
    def halfspace(cls, a, b):
        a = np.asarray(a, dtype=float)
        return cls("halfspace", a.size, {"a": a, "b": float(b)})

    @classmethod
    def full(cls, dim):
        return cls("full", dim)

    def project(self, v):
        return project_generic(self, v)

    def contains(self, v, rtol=MEMBERSHIP_RTOL):
        """Membership test with a relative tolerance."""
        v = np.asarray(v, dtype=float)
        p = self.params
        scale = 1.0 + np.linalg.norm(v)
        if self.kind == "full":
            return True
        if self.kind == "l1ball":
            return np.abs(v).sum() <= p["t"] + rtol * scale
        if self.kind == "box":
            return bool(np.all(v >= p["lo"] - rtol * scale) and np.all(v <= p["hi"] + rtol * scale))
        if self.kind == "ball":
            return np.linalg.norm(v - p["center"]) <= p["r"] + rtol * scale
        return p["a"] @ v <= p["b"] + rtol * scale * np.linalg.norm(p["a"])

    def sample(self, rng, n, scale=1.0):
        """Draw ``n`` feasible points by projecting Gaussian draws."""
        return [self.project(scale * rng.standard_normal(self.dim)) for _ in range(n)]


def project_generic(spec, v):
    """Exact Euclidean projection of ``v`` onto the set described by ``spec``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dim,):
        raise InputError(f"expected vector of length {spec.dim}, got shape {v.shape}")
    p = spec.params
    if spec.kind == "l1ball":
        return project_l1_ball(v, p["t"])
    if spec.kind == "box":
        return project_box(v, p["lo"], p["hi"])
    if spec.kind == "ball":
        return project_ball(v, p["center"], p["r"])
    if spec.kind == "halfspace":
        return project_halfspace(v, p["a"], p["b"])
    return v.copy()


def check_variational_inequality_of_projection(spec, v, samples):
    """Smallest value of ``<v - P(v), P(v) - y>`` over the feasible ``samples``.

    A correct projector gives a nonnegative result (up to rounding).
    """
    pv = project_generic(spec, v)
    r = np.asarray(v, dtype=float) - pv
    if len(samples) == 0:
        return np.inf
    return float(min(r @ (pv - np.asarray(y, dtype=float)) for y in samples))
