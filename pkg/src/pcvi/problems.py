"""Test-problem generators: constrained LASSO recovery and small affine VIs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import VIProblem
from .errors import InputError
from .oracle import OracleConfig, oracle_solve_vi
from .projections import ProjectorSpec, project_l1_ball, project_l1_ball_rows


@dataclass(frozen=True)
class LassoInstance:
    """``min 0.5 ||Ax - b||^2  s.t.  ||x||_1 <= t`` with a known sparse signal."""

    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    t: float
    noise_beta: float = 0.0
    seed: int = 0
    noise_mode: str = "std"
    t_policy: str = "exact"

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def K(self):
        return int(np.count_nonzero(self.x_true))

    def to_problem(self):
        F = lasso_mapping(self)
        t = self.t
        return VIProblem(
            dim=self.n,
            F=F,
            project_C=lambda v: project_l1_ball(v, t),
            membership_C=lambda v: np.abs(v).sum() <= t * (1 + 1e-9) + 1e-12,
            lipschitz_hint=F.lipschitz,
            objective=lambda x: lasso_objective(self, x),
            F_batch=F.rows,
            project_C_batch=lambda V: project_l1_ball_rows(V, t),
            pairing_batch=F.pairing_rows,
        )

    def metadata(self):
        return {
            "m": self.m,
            "n": self.n,
            "K": self.K,
            "t": self.t,
            "t_policy": self.t_policy,
            "noise_beta": self.noise_beta,
            "noise_mode": self.noise_mode,
            "seed": self.seed,
        }


def gen_lasso(m, n, K, noise_beta=0.0, t_policy="exact", seed=0, noise_mode="std", jitter=False):
    """Random sparse-recovery instance.

    ``A`` has i.i.d. standard Gaussian entries; ``x_true`` has ``K`` nonzeros at
    uniformly drawn positions with random signs (unit magnitude unless
    ``jitter``); ``b = A x_true + e`` with Gaussian ``e``. ``noise_beta`` is the
    noise standard deviation (``noise_mode="std"``) or its variance
    (``noise_mode="variance"``). ``t_policy`` is ``"exact"`` (``t = ||x_true||_1``)
    or a positive radius.
    """
    if not 0 <= K <= n:
        raise InputError(f"need 0 <= K <= n, got K={K}, n={n}")
    if not m < n:
        raise InputError(f"need m < n, got m={m}, n={n}")
    if noise_beta < 0:
        raise InputError("noise level must be nonnegative")
    if noise_mode not in ("std", "variance"):
        raise InputError("noise_mode must be 'std' or 'variance'")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    support = rng.choice(n, size=K, replace=False)
    amp = rng.choice([-1.0, 1.0], size=K)
    if jitter:
        amp *= rng.uniform(0.5, 1.5, size=K)
    x_true[support] = amp
    std = noise_beta if noise_mode == "std" else np.sqrt(noise_beta)
    e = std * rng.standard_normal(m) if noise_beta > 0 else np.zeros(m)
    b = A @ x_true + e
    if t_policy == "exact":
        t = float(np.abs(x_true).sum())
        if t == 0.0:
            t = 1.0  # an empty signal still needs a nondegenerate ball
        policy = "exact"
    else:
        t = float(t_policy)
        if not t > 0:
            raise InputError("l1 radius must be positive")
        policy = "scalar"
    return LassoInstance(A, b, x_true, t, float(noise_beta), int(seed), noise_mode, policy)


class LassoMapping:
    """``F(x) = A^T (A x - b)``; ``lipschitz`` is a power-iteration estimate of ``||A||_2^2``."""

    def __init__(self, A, b, power_iters=100, seed=0):
        self.A = A
        self.AT = np.ascontiguousarray(A.T)
        self.b = b
        self._gram = None
        self._Atb = None
        self.lipschitz = power_iteration_norm2(A, power_iters, seed)

    def __call__(self, x):
        return self.AT @ (self.A @ x - self.b)

    def rows(self, X):
        """Apply the map to every row of ``X``.

        Trial points of the line search are projections onto a small l1 ball
        and hence sparse, so the Gram matrix restricted to their joint support
        is cheaper than two dense products.
        """
        X = np.asarray(X, dtype=float)
        S = np.flatnonzero(np.any(X != 0, axis=0))
        if 4 * S.size > self.A.shape[1]:
            return (X @ self.AT - self.b) @ self.A
        if self._gram is None:
            self._gram = self.AT @ self.A
            self._Atb = self.AT @ self.b
        return X[:, S] @ self._gram[S, :] - self._Atb

    def pairing_rows(self, x, Y):
        """``<F(x) - F(y_i), x - y_i> = ||A (x - y_i)||^2`` for every row of ``Y``."""
        Y = np.asarray(Y, dtype=float)
        S = np.flatnonzero(np.any(Y != 0, axis=0))
        R = (self.A @ x)[None, :] - Y[:, S] @ self.AT[S, :]
        return np.einsum("ij,ij->i", R, R)


def power_iteration_norm2(A, iters=100, seed=0):
    """Estimate of the largest eigenvalue of ``A^T A``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam


def lasso_mapping(instance):
    return LassoMapping(instance.A, instance.b)


def lasso_objective(instance, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.n,):
        raise InputError(f"expected length {instance.n}, got shape {x.shape}")
    r = instance.A @ x - instance.b
    return 0.5 * float(r @ r)


def save_lasso_bundle(instance, directory):
    """Write ``A.bin`` (float64 little-endian, row-major), ``b.csv``,
    ``x_true.csv`` and ``meta.json`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    instance.A.astype("<f8").tofile(d / "A.bin")
    np.savetxt(d / "b.csv", instance.b, fmt="%.17g")
    np.savetxt(d / "x_true.csv", instance.x_true, fmt="%.17g")
    (d / "meta.json").write_text(json.dumps(instance.metadata(), indent=2, sort_keys=True) + "\n")
    return d


def load_lasso_bundle(directory):
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    A = np.fromfile(d / "A.bin", dtype="<f8").reshape(meta["m"], meta["n"])
    b = np.atleast_1d(np.loadtxt(d / "b.csv"))
    x_true = np.atleast_1d(np.loadtxt(d / "x_true.csv"))
    return LassoInstance(
        A, b, x_true, meta["t"], meta["noise_beta"], meta["seed"], meta["noise_mode"], meta["t_policy"]
    )


@dataclass(frozen=True)
class AffineVIInstance:
    """``F(x) = M x + q`` over a box, ball or the full space, with oracle solution."""

    M: np.ndarray
    q: np.ndarray
    spec: ProjectorSpec
    x_star: np.ndarray
    seed: int = 0

    @property
    def n(self):
        return self.q.size

    def F(self, x):
        return self.M @ x + self.q

    def to_problem(self):
        return VIProblem.from_spec(self.F, self.spec, lipschitz_hint=float(np.linalg.norm(self.M, 2)))


def _spec_for(kind, n):
    if kind == "box":
        return ProjectorSpec.box(-np.ones(n), np.ones(n))
    if kind == "ball":
        return ProjectorSpec.ball(np.zeros(n), 1.0)
    if kind == "full":
        return ProjectorSpec.full(n)
    raise InputError(f"affine VI feasible set must be 'box', 'ball' or 'full', got {kind!r}")


def affine_vi(M, q, spec, seed=0, oracle_cfg=None):
    """Wrap explicit data ``(M, q, spec)`` and attach the oracle solution."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if M.shape != (q.size, q.size) or spec.dim != q.size:
        raise InputError("M must be n x n and match q and the feasible set")
    sym_min = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())
    if sym_min < -1e-10:
        raise InputError(f"M + M^T is not positive semidefinite (min eigenvalue {sym_min:.3e})")
    inst = AffineVIInstance(M, q, spec, np.zeros(q.size), seed)
    x_star = oracle_solve_vi(inst.to_problem(), oracle_cfg)
    return AffineVIInstance(M, q, spec, x_star, seed)


def gen_affine_vi(n, skew_weight=0.0, kind="box", seed=0, oracle_cfg=None, q_scale=2.0):
    """Random monotone affine VI ``M = P^T P + skew_weight (S - S^T)``.

    ``P`` is a tall ``2n x n`` Gaussian scaled by ``1/sqrt(2n)`` so the symmetric
    part is well conditioned; ``q`` is Gaussian with standard deviation
    ``q_scale`` so the constraint is typically active.
    """
    if not 1 <= n <= 50:
        raise InputError("affine VI generator supports 1 <= n <= 50")
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((2 * n, n)) / np.sqrt(2 * n)
    S = rng.standard_normal((n, n)) / np.sqrt(n)
    M = P.T @ P + skew_weight * (S - S.T)
    q = q_scale * rng.standard_normal(n)
    return affine_vi(M, q, _spec_for(kind, n), seed, oracle_cfg)
