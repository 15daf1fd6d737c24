"""Correspondence between confined (lam = 1) and unconfined implicit schemes.

If M minimises the (tau, lam) step from prev, then dilate(M, R) minimises the
(tau~, lam~) step from dilate(prev, S) with tau~ = tau S R^{delta + 1} and
lam~ = (S (1 + lam tau) - R) / (tau~ R).  Chaining this with R = (1 + tau_n) S
maps a confined trajectory onto an unconfined one on the stretched partition
eta_n = tau_n S^{n-1} (S^n)^{1 + delta}.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .barenblatt import discrete_equilibrium, self_similar, self_similar_radius
from .errors import NegativeStep
from .jko import Functional, JkoConfig, Partition, Trajectory, jko_step, run_trajectory
from .params import ModelParameters, derive_params
from .quantile import (
    QuantileDensity,
    common_grid,
    dilate,
    l1_distance,
    to_eulerian,
    wasserstein_distance,
)


@dataclass(frozen=True)
class RescaledSchedule:
    taus: np.ndarray
    S: np.ndarray  # S^0 .. S^N
    etas: np.ndarray
    s_times: np.ndarray  # s^0 = 0 .. s^N
    t_times: np.ndarray

    def L(self, t):
        """Piecewise linear time map with L(t^n) = s^n."""
        return np.interp(t, self.t_times, self.s_times)

    @property
    def partition(self) -> Partition:
        return Partition(tuple(self.etas), "rescaled")


def build_schedule(part: Partition, p: ModelParameters) -> RescaledSchedule:
    taus = np.asarray(part.taus, dtype=float)
    S = np.empty(taus.size + 1)
    S[0] = 1.0
    for k, tau in enumerate(taus, start=1):
        S[k] = (1.0 + tau) * S[k - 1]
    etas = taus * S[:-1] * S[1:] ** (1.0 + p.delta)
    s_times = np.concatenate([[0.0], np.cumsum(etas)])
    return RescaledSchedule(taus, S, etas, s_times, part.times)


def continuous_time_map(t, delta: float):
    """Limit of the discrete time map as the steps vanish: (exp((delta+2) t) - 1)/(delta + 2)."""
    return np.expm1((delta + 2.0) * np.asarray(t, dtype=float)) / (delta + 2.0)


def rescaled_parameters(tau: float, lam: float, S: float, R: float, delta: float) -> tuple[float, float]:
    tau_t = tau * S * R ** (delta + 1.0)
    if not tau_t > 0:
        raise NegativeStep(f"rescaled step {tau_t} is not positive")
    lam_t = (S * (1.0 + lam * tau) - R) / (tau_t * R)
    return tau_t, lam_t


def _with_lambda(p: ModelParameters, lam: float) -> ModelParameters:
    # lam may be slightly negative here; only the information kernels read it
    return dataclasses.replace(p, lam=lam)


def minimizer_rescaling_check(prev: QuantileDensity, tau: float, S: float, R: float,
                              p: ModelParameters, cfg: JkoConfig | None = None) -> float:
    """W2(dilate(M, R), M~) for the two step problems related by the rescaling."""
    if not (S > 0 and R > 0):
        raise ValueError("S and R must be positive")
    tau_t, lam_t = rescaled_parameters(tau, p.lam, S, R, p.delta)
    m, _ = jko_step(prev, tau, Functional.FOURTH_ORDER, p, cfg)
    mt, _ = jko_step(dilate(prev, S), tau_t, Functional.FOURTH_ORDER, _with_lambda(p, lam_t), cfg)
    return wasserstein_distance(dilate(m, R), mt)


@dataclass
class CorrespondenceResult:
    schedule: RescaledSchedule
    deviations: np.ndarray  # per step n = 0 .. N
    confined: Trajectory | None = None
    unconfined: Trajectory | None = None

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.deviations.size else 0.0

    def write_csv(self, path) -> None:
        sch = self.schedule
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "t", "s", "S", "W2_deviation"])
            for n, dev in enumerate(self.deviations):
                w.writerow([n, repr(float(sch.t_times[n])), repr(float(sch.s_times[n])),
                            repr(float(sch.S[n])), repr(float(dev))])


def correspondence_run(initial: QuantileDensity, part: Partition, p_confined: ModelParameters,
                       cfg: JkoConfig | None = None) -> CorrespondenceResult:
    """Run the confined scheme on ``part`` and the unconfined one on the stretched
    partition, and compare them frame by frame in the dilated frame."""
    if p_confined.lam != 1.0:
        raise ValueError("the correspondence is stated for lam = 1")
    cfg = cfg or JkoConfig()
    sch = build_schedule(part, p_confined)
    if part.steps == 0:
        return CorrespondenceResult(sch, np.zeros(1))
    p_free = derive_params(p_confined.alpha, 0.0, p_confined.dim)
    conf = run_trajectory(initial, part, Functional.FOURTH_ORDER, p_confined, cfg)
    free = run_trajectory(initial, sch.partition, Functional.FOURTH_ORDER, p_free, cfg)
    devs = np.array([
        wasserstein_distance(free.snapshots[n], dilate(conf.snapshots[n], sch.S[n]))
        for n in sorted(conf.snapshots)
    ])
    return CorrespondenceResult(sch, devs, conf, free)


@dataclass(frozen=True)
class AsymptoticsRow:
    t: float
    R: float
    l1_gap: float
    scaled_gap: float
    w12_gap: float | None = None
    scaled_w12_gap: float | None = None


def _self_similar_reference(p: ModelParameters, t: float, n_points: int) -> QuantileDensity:
    # the discrete fixed point of the lam = 1 scheme, dilated: its reconstruction
    # carries the same discretisation bias as the computed states
    eq = discrete_equilibrium(derive_params(p.alpha, 1.0, p.dim), n_points)
    return dilate(eq, self_similar_radius(p, t))


def intermediate_asymptotics_report(traj: Trajectory, p: ModelParameters, grid_size: int = 400,
                                    reference: str = "discrete") -> list[AsymptoticsRow]:
    """L1 (and for alpha = 1 the gradient L2) distance to the spreading profile per snapshot."""
    if traj.params.lam != 0.0:
        raise ValueError("intermediate asymptotics concern the unconfined flow")
    times = traj.partition.times
    n_points = traj.initial.n_points
    rows = []
    for n in sorted(traj.snapshots):
        t = float(times[n])
        state = traj.snapshots[n]
        if reference == "discrete":
            ref = _self_similar_reference(p, t, n_points)
        else:
            ref = self_similar(p, t, n_points)
        grid = common_grid([state, ref], grid_size)
        u, b = to_eulerian(state, grid=grid), to_eulerian(ref, grid=grid)
        R = self_similar_radius(p, t)
        l1 = l1_distance(u, b)
        w12 = sw12 = None
        if p.alpha == 1.0:
            du = np.diff(u.values - b.values) / u.spacing
            w12 = float(math.sqrt(np.sum(du * du) * u.spacing))
            sw12 = R ** (2.0 + p.dim / 2.0) * w12
        rows.append(AsymptoticsRow(t, R, l1, R * l1, w12, sw12))
    return rows


def write_asymptotics_csv(rows: list[AsymptoticsRow], path) -> None:
    with_w12 = any(r.w12_gap is not None for r in rows)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        head = ["t", "R", "l1_gap", "scaled_gap"] + (["w12_gap", "scaled_w12_gap"] if with_w12 else [])
        w.writerow(head)
        for r in rows:
            vals = [r.t, r.R, r.l1_gap, r.scaled_gap] + ([r.w12_gap, r.scaled_w12_gap] if with_w12 else [])
            w.writerow([repr(float(v)) for v in vals])
