"""Implicit minimizing-movement steps in quantile coordinates.

Each step minimises

    J(x) = (1 / 2 tau) (1/N) sum (x_i - y_i)^2 + Phi(x)

over increasing position vectors, where y is the previous state and Phi is the
discrete information (fourth-order flow) or the discrete entropy (second-order
flow).  The Hessian of either Phi is pentadiagonal in x, so the inner solver is a
damped Newton iteration with a banded Cholesky factorisation, a Levenberg shift
when the Hessian is indefinite and a backtracking line search that keeps every
gap above the floor.  Convergence is declared on the sup norm of the Euclidean
gradient dJ/dx; the solver itself works with N J, whose gradient is the metric
one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from . import functionals as fn
from .errors import (
    InnerSolverDiverged,
    MonotonicityViolation,
    NonfiniteObjective,
    StepFailure,
)
from .params import ModelParameters
from .quantile import GAP_FLOOR, QuantileDensity, second_moment


class Functional(enum.Enum):
    FOURTH_ORDER = "fourth_order"
    SECOND_ORDER = "second_order"

    @classmethod
    def parse(cls, value) -> "Functional":
        return value if isinstance(value, cls) else cls(value)


_KERNELS = {
    Functional.FOURTH_ORDER: (fn.information_value, fn.information_grad, fn.information_hess_banded),
    Functional.SECOND_ORDER: (fn.entropy_value, fn.entropy_grad, fn.entropy_hess_banded),
}


@dataclass(frozen=True)
class Partition:
    taus: tuple
    kind: str = "uniform"

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        if any(not t > 0 for t in taus):
            raise ValueError("step sizes must be positive")
        object.__setattr__(self, "taus", taus)

    @classmethod
    def uniform(cls, tau: float, steps: int) -> "Partition":
        return cls((tau,) * int(steps), "uniform")

    @classmethod
    def geometric(cls, tau0: float, ratio: float, steps: int) -> "Partition":
        return cls(tuple(tau0 * ratio ** k for k in range(int(steps))), "geometric")

    @property
    def steps(self) -> int:
        return len(self.taus)

    @property
    def times(self) -> np.ndarray:
        """t_0 = 0, t_1, ..., t_N."""
        return np.concatenate([[0.0], np.cumsum(self.taus)])

    @property
    def horizon(self) -> float:
        return math.fsum(self.taus)


@dataclass(frozen=True)
class JkoConfig:
    inner_grad_tol: float = 1e-8
    inner_max_iter: int = 200
    ls_contraction: float = 0.5
    ls_sufficient: float = 1e-4
    min_gap: float = GAP_FLOOR  # relative to the particle spread
    eulerian_grid_size: int = 400
    snapshot_every: int = 1

    def __post_init__(self):
        if not self.inner_grad_tol > 0:
            raise ValueError("inner_grad_tol must be positive")
        if self.inner_max_iter < 50:
            raise ValueError("inner_max_iter must be at least 50")
        if not 0 < self.ls_contraction < 1 or not 0 < self.ls_sufficient < 1:
            raise ValueError("line-search constants must lie in (0, 1)")


@dataclass
class JkoStepRecord:
    n: int
    t: float
    tau: float
    w2sq: float
    F_before: float
    F_after: float
    F0_after: float
    H_before: float
    H_after: float
    logH_before: float
    logH_after: float
    m2_before: float
    m2: float
    hess_sn: float
    inner_iters: int
    grad_norm: float
    floor_hits: int = 0
    flags: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    initial: QuantileDensity
    functional: Functional
    params: ModelParameters
    partition: Partition
    snapshots: dict = field(default_factory=dict)  # n -> QuantileDensity
    records: list = field(default_factory=list)
    final: QuantileDensity | None = None

    @property
    def times(self) -> np.ndarray:
        return self.partition.times[: len(self.records) + 1]


def objective_value(x, prev: QuantileDensity, tau: float, functional, p: ModelParameters) -> float:
    x = np.asarray(x, dtype=float)
    val = _KERNELS[Functional.parse(functional)][0]
    return 0.5 / tau * float(np.mean((x - prev.positions) ** 2)) + val(x, p)


def objective_gradient(x, prev: QuantileDensity, tau: float, functional, p: ModelParameters) -> np.ndarray:
    """Euclidean gradient of the step objective J in the coordinates x."""
    x = np.asarray(x, dtype=float)
    grad = _KERNELS[Functional.parse(functional)][1]
    return (x - prev.positions) / (tau * x.size) + grad(x, p)


def _solve(y: np.ndarray, tau: float, functional: Functional, p: ModelParameters, cfg: JkoConfig):
    val, grad, hess = _KERNELS[functional]
    n = y.size
    gmin = cfg.min_gap * float(y[-1] - y[0])

    # everything below is scaled by N so the metric gradient is the Euclidean one
    def obj(x):
        return 0.5 / tau * float(np.dot(x - y, x - y)) + n * val(x, p)

    def gradient(x):
        return (x - y) / tau + n * grad(x, p)

    x = y.copy()
    jx = obj(x)
    g = gradient(x)
    if not (math.isfinite(jx) and np.all(np.isfinite(g))):
        raise NonfiniteObjective("objective is not finite at the previous state")
    gnorm = float(np.max(np.abs(g)))
    tol = n * cfg.inner_grad_tol
    it = 0
    while gnorm > tol:
        if it >= cfg.inner_max_iter:
            raise InnerSolverDiverged(f"no convergence after {it} iterations, |grad| = {gnorm / n:.3e}")
        it += 1
        ab = n * hess(x, p)
        ab[2] += 1.0 / tau
        d = _newton_direction(ab, g)
        slope = float(np.dot(g, d))
        t = 1.0
        accepted = False
        gaps_ok_somewhere = False
        while t > 1e-12:
            xn = x + t * d
            if np.min(np.diff(xn)) >= gmin:
                gaps_ok_somewhere = True
                jn = obj(xn)
                if math.isfinite(jn):
                    if jn <= jx + cfg.ls_sufficient * t * slope:
                        accepted = True
                        break
                    # decrease below rounding: fall back on the gradient norm
                    if jn - jx <= 64 * np.finfo(float).eps * max(1.0, abs(jx)):
                        gn = gradient(xn)
                        if np.max(np.abs(gn)) < gnorm:
                            accepted = True
                            break
            t *= cfg.ls_contraction
        if not accepted:
            if not gaps_ok_somewhere:
                raise MonotonicityViolation("line search cannot keep the gaps above the floor")
            raise InnerSolverDiverged(f"line search stalled at |grad| = {gnorm / n:.3e}")
        x, jx = xn, jn
        g = gradient(x)
        if not np.all(np.isfinite(g)):
            raise NonfiniteObjective("non-finite gradient")
        gnorm = float(np.max(np.abs(g)))
    return x, it, gnorm / n


def _newton_direction(ab: np.ndarray, g: np.ndarray) -> np.ndarray:
    shift = 0.0
    scale = float(np.max(np.abs(ab[2])))
    for _ in range(40):
        try:
            m = ab.copy()
            m[2] += shift
            d = solveh_banded(m, -g, check_finite=False)
            if np.all(np.isfinite(d)) and np.dot(g, d) < 0:
                return d
        except LinAlgError:
            pass
        shift = max(10.0 * shift, 1e-10 * scale)
    return -g / scale


def jko_step(prev: QuantileDensity, tau: float, functional, p: ModelParameters,
             cfg: JkoConfig | None = None, n: int = 1, t: float = 0.0) -> tuple[QuantileDensity, JkoStepRecord]:
    """One implicit step from ``prev`` with step size ``tau``."""
    cfg = cfg or JkoConfig()
    if not tau > 0:
        raise ValueError("tau must be positive")
    functional = Functional.parse(functional)
    y = np.array(prev.positions)
    x, iters, gnorm = _solve(y, tau, functional, p, cfg)
    out = QuantileDensity(x)
    rec = JkoStepRecord(
        n=n,
        t=t,
        tau=tau,
        w2sq=float(np.mean((x - y) ** 2)),
        F_before=fn.information_value(y, p),
        F_after=fn.information_value(x, p),
        F0_after=fn.information0_value(x, p),
        H_before=fn.entropy_value(y, p),
        H_after=fn.entropy_value(x, p),
        logH_before=fn.log_entropy_value(y),
        logH_after=fn.log_entropy_value(x),
        m2_before=second_moment(prev),
        m2=second_moment(out),
        hess_sn=fn.lagrangian_hessian_seminorm(out, p.alpha),
        inner_iters=iters,
        grad_norm=gnorm,
        floor_hits=fn.floor_hits(x),
    )
    return out, rec


def run_trajectory(initial: QuantileDensity, part: Partition, functional, p: ModelParameters,
                   cfg: JkoConfig | None = None, on_step=None) -> Trajectory:
    """Iterate ``jko_step`` over the partition.

    ``on_step(record, prev, cur)`` may fill ``record.flags``; it is called after
    every step.  Snapshots are stored every ``cfg.snapshot_every`` steps and at the end.
    """
    cfg = cfg or JkoConfig()
    functional = Functional.parse(functional)
    traj = Trajectory(initial, functional, p, part)
    traj.snapshots[0] = initial
    times = part.times
    cur = initial
    for k, tau in enumerate(part.taus, start=1):
        try:
            nxt, rec = jko_step(cur, tau, functional, p, cfg, n=k, t=float(times[k]))
        except Exception as exc:
            raise StepFailure(k, exc) from exc
        if on_step is not None:
            on_step(rec, cur, nxt)
        traj.records.append(rec)
        if k % cfg.snapshot_every == 0 or k == part.steps:
            traj.snapshots[k] = nxt
        cur = nxt
    traj.final = cur
    return traj
