"""Per-step inequality ledger, decay fits and distances to equilibrium.

Every check is reporting-only: a violated inequality sets a flag and keeps its
residual and the slack it was compared against.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from . import functionals as fn
from .barenblatt import BarenblattProfile, discrete_equilibrium, stationary_profile
from .errors import GridMismatch, InsufficientSignal
from .jko import Functional, JkoStepRecord, Trajectory
from .params import ModelParameters
from .quantile import (
    QuantileDensity,
    common_grid,
    l1_distance,
    to_eulerian,
    wasserstein_distance,
)

LEDGER_COLUMNS = [
    "n", "t", "tau", "W2sq", "F", "H", "Hhat", "Fhat", "logH", "M2", "hess_sn",
    "inner_iters", "grad_norm", "flag_eq84", "flag_eq78H", "flag_eq78F", "flag_heatFI",
]
EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# test functions


@functools.lru_cache(maxsize=1)
def test_function_bank() -> tuple:
    """Five smooth test functions with exact derivatives and curvature bounds."""
    x = sp.Symbol("x", real=True)
    cut = sp.exp(-(x / 3) ** 4)
    exprs = [
        ("bump", sp.exp(-x ** 2 / (2 * sp.Rational(1, 2) ** 2))),
        ("shifted_bump", sp.exp(-(x - sp.Rational(7, 10)) ** 2 / (2 * sp.Rational(2, 5) ** 2))),
        ("truncated_quadratic", x ** 2 / 2 * cut),
        ("truncated_cubic", x ** 3 / 6 * cut),
        ("wavelet", sp.sin(3 * x) * sp.exp(-x ** 2 / 2)),
    ]
    return tuple(fn.TestFunction.from_sympy(name, e) for name, e in exprs)


# ---------------------------------------------------------------------------
# equilibrium reference


@dataclass(frozen=True)
class EquilibriumReference:
    """Closed-form profile plus the discrete fixed point at the run's resolution.

    Normalised functionals and distances are measured against the discrete
    fixed point, which is the exact limit of the scheme.
    """

    params: ModelParameters
    profile: BarenblattProfile
    state: QuantileDensity
    H_eq: float
    F_eq: float

    @classmethod
    def build(cls, p: ModelParameters, n_points: int) -> "EquilibriumReference":
        prof = stationary_profile(p)
        eq = discrete_equilibrium(p, n_points)
        return cls(p, prof, eq, fn.entropy(eq, p), fn.information(eq, p))

    def hhat(self, a: QuantileDensity) -> float:
        return fn.entropy(a, self.params) - self.H_eq

    def fhat(self, a: QuantileDensity) -> float:
        return fn.information(a, self.params) - self.F_eq


# ---------------------------------------------------------------------------
# per-step ledger


@dataclass(frozen=True)
class LedgerSlack:
    eq84_rel: float = 1e-5
    contraction: float = 1e-8
    heat_rel: float = 1e-3
    weak_rel: float = 1e-4
    monotone_factor: float = 10.0  # times inner_grad_tol


@dataclass
class Check:
    holds: bool | None  # None: not applicable
    residual: float = 0.0
    slack: float = 0.0


@dataclass
class StepReport:
    n: int
    checks: dict = field(default_factory=dict)
    hhat: float | None = None
    fhat: float | None = None

    @property
    def violations(self) -> list[str]:
        return [k for k, c in self.checks.items() if c.holds is False]


def ledger_check(record: JkoStepRecord, prev: QuantileDensity, cur: QuantileDensity, p: ModelParameters,
                 functional: Functional = Functional.FOURTH_ORDER, reference: EquilibriumReference | None = None,
                 bank=None, slack: LedgerSlack = LedgerSlack(), inner_grad_tol: float = 1e-8) -> StepReport:
    """Evaluate the per-step inequalities of the fourth-order scheme.

    energy: F^n <= F^{n-1} + 10 inner_grad_tol.
    eq84: (1 + 2 lam tau) m2^n + W2^2 - m2^{n-1} - 2 delta tau F_0^n = 0.
    eq78H / eq78F: (1 + 2 lam tau) Hhat^n <= Hhat^{n-1}, same for Fhat (lam > 0).
    heatFI: c0 tau int (sigma'')^2 <= logH^{n-1} - logH^n + d lam tau.
    weak: |int zeta dM^n - int zeta dM^{n-1} + tau N(M^n; zeta')| <= (kappa/2) W2^2.
    """
    rep = StepReport(record.n)
    tau = record.tau
    if reference is not None:
        rep.hhat = record.H_after - reference.H_eq
        rep.fhat = record.F_after - reference.F_eq
    if functional is not Functional.FOURTH_ORDER:
        for k in ("energy", "eq84", "eq78H", "eq78F", "heatFI", "weak"):
            rep.checks[k] = Check(None)
        return rep

    rep.checks["energy"] = _le(record.F_after - record.F_before, slack.monotone_factor * inner_grad_tol)

    res84 = abs((1 + 2 * p.lam * tau) * record.m2 + record.w2sq - record.m2_before
                - 2 * p.delta * tau * record.F0_after) / max(1.0, record.m2_before)
    rep.checks["eq84"] = _le(res84, slack.eq84_rel)

    if p.lam > 0 and reference is not None:
        c = 1 + 2 * p.lam * tau
        h_prev = record.H_before - reference.H_eq
        f_prev = record.F_before - reference.F_eq
        rep.checks["eq78H"] = _le(c * rep.hhat - h_prev, slack.contraction)
        rep.checks["eq78F"] = _le(c * rep.fhat - f_prev, slack.contraction)
    else:
        rep.checks["eq78H"] = Check(None)
        rep.checks["eq78F"] = Check(None)

    lhs = p.c0 * tau * record.hess_sn
    rhs = record.logH_before - record.logH_after + p.dim * p.lam * tau
    rep.checks["heatFI"] = _le(lhs - rhs, slack.heat_rel * (1 + abs(record.logH_before)))

    worst = None
    for z in bank if bank is not None else test_function_bank():
        delta = float(np.mean(z.f(cur.positions)) - np.mean(z.f(prev.positions)))
        res = abs(delta + tau * fn.lagrangian_N(cur, p, z)) - 0.5 * z.kappa * record.w2sq
        chk = _le(res, slack.weak_rel * z.kappa)
        if worst is None or chk.residual - chk.slack > worst.residual - worst.slack:
            worst = chk
    rep.checks["weak"] = worst
    return rep


def _le(excess: float, slack: float) -> Check:
    return Check(bool(excess <= slack), float(excess), float(slack))


def make_step_hook(p: ModelParameters, functional: Functional, reference=None, inner_grad_tol: float = 1e-8,
                   slack: LedgerSlack = LedgerSlack(), reports: list | None = None):
    """Callback for ``run_trajectory`` that fills ``record.flags`` and collects reports."""
    reports = [] if reports is None else reports
    bank = test_function_bank()

    def hook(rec, prev, cur):
        rep = ledger_check(rec, prev, cur, p, functional, reference, bank, slack, inner_grad_tol)
        rec.flags = {k: c.holds for k, c in rep.checks.items()}
        reports.append(rep)

    return hook, reports


def _flag(v) -> str:
    return "na" if v is None else ("1" if v else "0")


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def ledger_rows(traj: Trajectory, reports: list[StepReport]) -> list[list[str]]:
    rows = []
    for rec, rep in zip(traj.records, reports):
        rows.append([
            str(rec.n), repr(rec.t), repr(rec.tau), repr(rec.w2sq), repr(rec.F_after), repr(rec.H_after),
            _num(rep.hhat), _num(rep.fhat), repr(rec.logH_after), repr(rec.m2), repr(rec.hess_sn),
            str(rec.inner_iters), repr(rec.grad_norm),
            _flag(rec.flags.get("eq84")), _flag(rec.flags.get("eq78H")),
            _flag(rec.flags.get("eq78F")), _flag(rec.flags.get("heatFI")),
        ])
    return rows


def write_ledger_csv(path, traj: Trajectory, reports: list[StepReport]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        w.writerows(ledger_rows(traj, reports))


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    window: tuple


def fit_decay_rate(times, values, floor: float = 0.0, min_samples: int = 10) -> DecayFit:
    """Least-squares fit of values ~ prefactor * exp(-rate t) over samples above ``floor``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(v) & (v > floor)
    if keep.sum() < min_samples:
        raise InsufficientSignal(f"only {int(keep.sum())} samples above the floor {floor:.3e}")
    tk, lv = t[keep], np.log(v[keep])
    slope, icpt = np.polyfit(tk, lv, 1)
    return DecayFit(-float(slope), float(math.exp(icpt)), (float(tk[0]), float(tk[-1])))


def equilibrium_floor(eq_value: float) -> float:
    return 1e3 * EPS * max(1.0, abs(eq_value))


# ---------------------------------------------------------------------------
# distances


@dataclass(frozen=True)
class DistanceReport:
    l1: float
    w2: float
    hhat: float
    fhat: float
    ck_ratio: float
    talagrand_holds: bool
    w12: float | None = None


def distance_report(state: QuantileDensity, reference: EquilibriumReference, grid=None,
                    grid_size: int = 400, slack: float = 1e-10) -> DistanceReport:
    """Distances from ``state`` to the equilibrium, through Eulerian reconstructions."""
    p = reference.params
    eq = reference.state
    if state.n_points != eq.n_points:
        raise GridMismatch("state and reference resolutions differ")
    if grid is None:
        grid = common_grid([state, eq], grid_size)
    u, b = to_eulerian(state, grid=grid), to_eulerian(eq, grid=grid)
    l1 = l1_distance(u, b)
    w2 = wasserstein_distance(state, eq)
    hhat = reference.hhat(state)
    fhat = reference.fhat(state)
    ck = 0.0 if hhat <= 1e-14 else l1 / math.sqrt(hhat)
    talagrand = 0.5 * p.capital_lambda * w2 * w2 <= hhat + slack
    w12 = None
    if p.alpha == 1.0:
        du = np.diff(u.values - b.values) / u.spacing
        w12 = float(math.sqrt(np.sum(du * du) * u.spacing))
    return DistanceReport(l1, w2, hhat, fhat, ck, bool(talagrand), w12)


# ---------------------------------------------------------------------------
# run summary


def summarize(traj: Trajectory, reports: list[StepReport], reference: EquilibriumReference | None = None,
              grid_size: int = 400) -> dict:
    """Fitted and predicted rates, worst residual per check and CK ratio statistics."""
    p = traj.params
    out: dict = {"params": p.as_dict(), "functional": traj.functional.value, "steps": len(traj.records)}
    drift = [math.sqrt(r.w2sq) for r in traj.records]
    out["max_W2_drift"] = max(drift) if drift else 0.0
    out["max_inner_iters"] = max((r.inner_iters for r in traj.records), default=0)
    checks: dict = {}
    for rep in reports:
        for k, c in rep.checks.items():
            slot = checks.setdefault(k, {"applicable": False, "violations": 0, "max_excess": None})
            if c.holds is None:
                continue
            slot["applicable"] = True
            slot["violations"] += int(not c.holds)
            ex = c.residual - c.slack
            if slot["max_excess"] is None or ex > slot["max_excess"]:
                slot["max_excess"] = ex
                slot["residual_at_max"] = c.residual
                slot["slack_at_max"] = c.slack
    out["checks"] = checks
    out["failed_checks"] = sorted(k for k, v in checks.items() if v["violations"])

    if reference is not None and p.lam > 0 and traj.records:
        times = traj.partition.times
        idx = sorted(traj.snapshots)
        ts = np.array([times[n] for n in idx])
        hh = np.array([reference.hhat(traj.snapshots[n]) for n in idx])
        ff = np.array([reference.fhat(traj.snapshots[n]) for n in idx])
        dists = [distance_report(traj.snapshots[n], reference, grid_size=grid_size) for n in idx]
        l1 = np.array([d.l1 for d in dists])
        ck = np.array([d.ck_ratio for d in dists if d.ck_ratio > 0])
        out["predicted_H_rate"] = 2 * p.lam
        out["predicted_F_rate"] = 2 * p.lam
        out["predicted_L1_rate"] = p.lam
        for key, series, eqv in (("H", hh, reference.H_eq), ("F", ff, reference.F_eq), ("L1", l1, 0.0)):
            try:
                fit = fit_decay_rate(ts, series, equilibrium_floor(eqv))
                out[f"fitted_{key}_rate"] = fit.rate
                out[f"fitted_{key}_window"] = list(fit.window)
            except InsufficientSignal:
                out[f"fitted_{key}_rate"] = None
        out["talagrand_violations"] = int(sum(not d.talagrand_holds for d in dists))
        if ck.size:
            out["ck_ratio"] = {"min": float(ck.min()), "median": float(np.median(ck)), "max": float(ck.max())}
    return out
