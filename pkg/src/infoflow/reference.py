"""Closed-form oracles and the finite-dimensional flow-interchange validator.

The finite-dimensional problem takes a kappa-convex potential V on R^m and the
derived energy U = |grad V|^2 + 2 (theta - kappa) V.  Along the gradient flow
of U, V and U decay at least like exp(-4 kappa theta t) and
exp(-4 min(kappa, theta) theta t) respectively; the quadratic family attains
the first rate exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Blowup, InsufficientDecay, NotSymmetric, OutOfRange, ZeroVector
from .params import ModelParameters

BLOWUP_RADIUS = 1e6


@dataclass(frozen=True)
class FinDimProblem:
    """V(u) = kappa |u|^2 / 2 + eps sum u_i^4 / 4 (``family='quartic'``) or eps = 0."""

    m: int
    kappa: float
    theta: float
    u0: tuple
    family: str = "quadratic"
    eps: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0 or self.theta <= 0:
            raise ValueError("kappa and theta must be positive")
        if self.family not in ("quadratic", "quartic"):
            raise ValueError(f"unknown potential family {self.family!r}")
        if len(self.u0) != self.m:
            raise ValueError("u0 has the wrong dimension")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative to keep V kappa-convex")

    @property
    def _eps(self) -> float:
        return self.eps if self.family == "quartic" else 0.0

    def V(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * self.kappa * np.sum(u * u, axis=-1) + 0.25 * self._eps * np.sum(u ** 4, axis=-1)

    def grad_V(self, u):
        u = np.asarray(u, dtype=float)
        return self.kappa * u + self._eps * u ** 3

    def hess_V_diag(self, u):
        return self.kappa + 3.0 * self._eps * np.asarray(u, dtype=float) ** 2

    def U(self, u):
        g = self.grad_V(u)
        return np.sum(g * g, axis=-1) + 2.0 * (self.theta - self.kappa) * self.V(u)

    def grad_U(self, u):
        g = self.grad_V(u)
        return 2.0 * self.hess_V_diag(u) * g + 2.0 * (self.theta - self.kappa) * g

    def min_hessian_eigenvalue(self, points) -> float:
        """Smallest eigenvalue of the Hessian of V over sampled points (it is diagonal)."""
        return float(np.min(self.hess_V_diag(np.atleast_2d(points))))


@dataclass(frozen=True)
class FinDimTrajectory:
    times: np.ndarray
    states: np.ndarray  # shape (steps + 1, m)


def findim_flow(prob: FinDimProblem, horizon: float, dt: float) -> FinDimTrajectory:
    """Classical fourth-order Runge-Kutta for u' = -grad U(u) with constant dt."""
    if not dt > 0 or dt > 1e-3 * horizon * (1 + 1e-12):
        raise ValueError("dt must satisfy 0 < dt <= 1e-3 * horizon")
    steps = int(round(horizon / dt))
    f = lambda u: -prob.grad_U(u)
    u = np.array(prob.u0, dtype=float)
    out = np.empty((steps + 1, prob.m))
    out[0] = u
    for k in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):  # blowup is caught below
            k1 = f(u)
            k2 = f(u + 0.5 * dt * k1)
            k3 = f(u + 0.5 * dt * k2)
            k4 = f(u + dt * k3)
            u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_RADIUS:
            raise Blowup(f"|u| exceeded {BLOWUP_RADIUS} at step {k + 1}")
        out[k + 1] = u
    return FinDimTrajectory(dt * np.arange(steps + 1), out)


def findim_interchange_residual(prob: FinDimProblem, traj: FinDimTrajectory) -> float:
    """max_t |d/dt V(u_t) + <grad U, grad V>(u_t)| with centred differences in t."""
    if traj.times.size < 3:
        return 0.0
    v = prob.V(traj.states)
    dt = traj.times[1] - traj.times[0]
    dv = (v[2:] - v[:-2]) / (2 * dt)
    inner = np.sum(prob.grad_U(traj.states[1:-1]) * prob.grad_V(traj.states[1:-1]), axis=-1)
    return float(np.max(np.abs(dv + inner)))


@dataclass(frozen=True)
class FinDimRates:
    rate_V: float
    rate_V_predicted: float
    rate_U: float
    rate_U_predicted: float

    @property
    def holds(self) -> bool:
        return self.rate_V >= 0.99 * self.rate_V_predicted and self.rate_U >= 0.99 * self.rate_U_predicted


def _log_fit(t: np.ndarray, v: np.ndarray) -> float:
    floor = 1e3 * np.finfo(float).eps * max(1.0, float(v[0]))
    keep = v > floor
    if keep.sum() < 10 or math.log(v[keep][0] / v[keep][-1]) < 5.0:
        raise InsufficientDecay("signal hit the floating-point floor before five e-foldings")
    slope, _ = np.polyfit(t[keep], np.log(v[keep]), 1)
    return -float(slope)


def findim_decay_rates(prob: FinDimProblem, traj: FinDimTrajectory) -> FinDimRates:
    """Least-squares exponents of V - V_min and U - U_min (both minima are 0 at u = 0)."""
    v = prob.V(traj.states)
    u = prob.U(traj.states)
    if not v[0] > 0:
        raise InsufficientDecay("initial point is already the minimiser")
    k, th = prob.kappa, prob.theta
    return FinDimRates(
        rate_V=_log_fit(traj.times, v),
        rate_V_predicted=4 * k * th,
        rate_U=_log_fit(traj.times, u),
        rate_U_predicted=4 * min(k, th) * th,
    )


def findim_report(prob: FinDimProblem, traj: FinDimTrajectory) -> dict:
    r = findim_decay_rates(prob, traj)
    return {
        "kappa": prob.kappa,
        "theta": prob.theta,
        "rate_V": r.rate_V,
        "rate_V_predicted": r.rate_V_predicted,
        "rate_U": r.rate_U,
        "rate_U_predicted": r.rate_U_predicted,
        "interchange_residual": findim_interchange_residual(prob, traj),
    }


def ou_variance_oracle(sigma0_sq: float, t: float, p: ModelParameters) -> float:
    """Variance along d_t v = (1/2) v'' + capital_lambda (x v)' started from variance sigma0_sq."""
    if not p.is_log_case:
        raise OutOfRange("the variance oracle is exact only for alpha = 1/2")
    if not sigma0_sq > 0:
        raise ValueError("sigma0_sq must be positive")
    lam_c = p.capital_lambda
    if lam_c == 0.0:
        return sigma0_sq + t
    s_inf = 1.0 / (2.0 * lam_c)
    return s_inf + (sigma0_sq - s_inf) * math.exp(-2.0 * lam_c * t)


def matrix_trace_inequality_check(A, e) -> tuple[float, float, bool]:
    """Both sides of (d-1)|A|^2 - ((d-1)/d)(tr A)^2 >= (d A e.e - tr A |e|^2)^2 / (d |e|^4)."""
    A = np.asarray(A, dtype=float)
    e = np.asarray(e, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d) or np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
        raise NotSymmetric("A must be a symmetric square matrix")
    e2 = float(e @ e)
    if e2 == 0.0:
        raise ZeroVector("e must be nonzero")
    tr = float(np.trace(A))
    lhs = (d - 1) * float(np.sum(A * A)) - (d - 1) / d * tr * tr
    rhs = (d * float(e @ A @ e) - tr * e2) ** 2 / (d * e2 * e2)
    return lhs, rhs, lhs >= rhs - 1e-10
