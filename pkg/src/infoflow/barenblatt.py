"""Stationary profiles of the confined problem and the spreading self-similar family.

For alpha > 1/2 the unit-mass minimiser of the confined entropy is
(a - b |x|^2)_+^{k}, k = 1/(alpha - 1/2), with b = ((alpha - 1/2)/sqrt(2 alpha))
capital_lambda; for alpha = 1/2 it is the Gaussian a exp(-capital_lambda |x|^2).
The same profile minimises the confined information.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import BisectionFailure, NoStationaryState
from .functionals import entropy_grad, entropy_hess_banded, entropy_value
from .params import ModelParameters, derive_params
from .quantile import QuantileDensity, dilate, mass_grid

GAUSSIAN_SWITCH = 1e-6  # alpha - 1/2 below which the Gaussian branch is used
A_BRACKET = (1e-6, 1e6)


@dataclass(frozen=True)
class BarenblattProfile:
    params: ModelParameters
    a_norm: float
    b_coeff: float
    support_radius: float
    exponent: float  # inf marks the Gaussian branch

    @property
    def is_gaussian(self) -> bool:
        return math.isinf(self.exponent)

    def summary(self) -> dict:
        return {
            "alpha": self.params.alpha,
            "lambda": self.params.lam,
            "d": self.params.dim,
            "a_norm": self.a_norm,
            "support_radius": self.support_radius,
        }


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _compact_mass(a: float, b: float, k: float, d: int) -> float:
    radial, _ = integrate.quad(lambda t: t ** (d - 1) * (1 - t * t) ** k, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return _sphere_area(d) * (a / b) ** (d / 2) * a ** k * radial


def stationary_profile(p: ModelParameters) -> BarenblattProfile:
    """Unit-mass stationary profile; the height ``a_norm`` is fixed by root bracketing."""
    if p.lam <= 0.0:
        raise NoStationaryState("no stationary profile without confinement")
    lam_c = p.capital_lambda
    d = p.dim
    if p.alpha - 0.5 < GAUSSIAN_SWITCH:
        a = (lam_c / math.pi) ** (d / 2)
        return BarenblattProfile(p, a, 0.0, math.inf, math.inf)
    k = 1.0 / (p.alpha - 0.5)
    b = (p.alpha - 0.5) / math.sqrt(2.0 * p.alpha) * lam_c

    def excess(log_a):
        return math.log(_compact_mass(math.exp(log_a), b, k, d))

    lo, hi = (math.log(v) for v in A_BRACKET)
    try:
        log_a = optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    except ValueError as exc:
        raise BisectionFailure(str(exc)) from exc
    a = math.exp(log_a)
    if abs(_compact_mass(a, b, k, d) - 1.0) > 1e-8:
        raise BisectionFailure("mass normalisation did not converge")
    return BarenblattProfile(p, a, b, math.sqrt(a / b), k)


def evaluate(prof: BarenblattProfile, x) -> np.ndarray | float:
    """Pointwise density; ``x`` may be a scalar, an array of radii or of points in R^d."""
    x = np.asarray(x, dtype=float)
    if prof.params.dim > 1 and x.ndim >= 1 and x.shape[-1] == prof.params.dim:
        r2 = np.sum(x * x, axis=-1)
    else:
        r2 = x * x
    if prof.is_gaussian:
        out = prof.a_norm * np.exp(-prof.params.capital_lambda * r2)
    else:
        inside = r2 < prof.support_radius ** 2
        out = np.where(inside, np.maximum(prof.a_norm - prof.b_coeff * r2, 0.0), 0.0) ** prof.exponent
    return float(out) if out.ndim == 0 else out


def second_moment_exact(prof: BarenblattProfile) -> float:
    """int |x|^2 b dx in one dimension."""
    if prof.is_gaussian:
        return 1.0 / (2.0 * prof.params.capital_lambda)
    rho = prof.support_radius
    val, _ = integrate.quad(lambda x: x * x * evaluate(prof, x), -rho, rho, epsabs=1e-13)
    return val


def quantile_positions(prof: BarenblattProfile, m: np.ndarray) -> np.ndarray:
    """Inverse CDF of the one-dimensional profile at masses ``m`` in (0, 1)."""
    m = np.asarray(m, dtype=float)
    c = 2.0 * m - 1.0
    if prof.is_gaussian:
        return stats.norm.ppf(m) / math.sqrt(2.0 * prof.params.capital_lambda)
    # |x|^2 / rho^2 is Beta(1/2, k + 1) distributed
    t = special.betaincinv(0.5, prof.exponent + 1.0, np.abs(c))
    return np.sign(c) * prof.support_radius * np.sqrt(t)


def to_quantile(prof: BarenblattProfile, n_points: int) -> QuantileDensity:
    if prof.params.dim != 1:
        raise ValueError("quantile states exist only in one dimension")
    x = quantile_positions(prof, mass_grid(n_points))
    if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
        raise BisectionFailure("profile inversion failed")
    x = 0.5 * (x - x[::-1])  # exact symmetry
    return QuantileDensity(x)


def self_similar_radius(p: ModelParameters, t: float) -> float:
    return (1.0 + (p.delta + 2.0) * t) ** (1.0 / (p.delta + 2.0))


def self_similar(p: ModelParameters, t: float, n_points: int) -> QuantileDensity:
    """Spreading solution of the unconfined flow: the lam = 1 profile dilated by R(t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    prof = stationary_profile(derive_params(p.alpha, 1.0, p.dim))
    return dilate(to_quantile(prof, n_points), self_similar_radius(p, t))


def discrete_equilibrium(p: ModelParameters, n_points: int, tol: float = 1e-13, max_iter: int = 200) -> QuantileDensity:
    """Minimiser of the discrete confined entropy.

    It is the exact fixed point of both implicit schemes at this resolution, and
    the minimiser of the discrete information as well.
    """
    from scipy.linalg import solveh_banded

    if p.lam <= 0.0:
        raise NoStationaryState("no stationary state without confinement")
    x = to_quantile(stationary_profile(p), n_points).positions.copy()
    n = x.size
    for _ in range(max_iter):
        g = n * entropy_grad(x, p)
        if np.max(np.abs(g)) <= tol:
            break
        ab = n * entropy_hess_banded(x, p)
        step = solveh_banded(ab, -g)
        f0 = entropy_value(x, p)
        t = 1.0
        while True:
            y = x + t * step
            if np.all(np.diff(y) > 0) and entropy_value(y, p) <= f0 + 1e-4 * t * np.dot(g, step) / n + 1e-15 * abs(f0):
                break
            t *= 0.5
            if t < 1e-12:
                break
        if t < 1e-12:
            break
        x = y
    x = 0.5 * (x - x[::-1])
    return QuantileDensity(x)


def write_profile_csv(prof: BarenblattProfile, path, n_samples: int = 401) -> None:
    if prof.is_gaussian:
        half = 6.0 / math.sqrt(2.0 * prof.params.capital_lambda)
    else:
        half = 1.1 * prof.support_radius
    xs = np.linspace(-half, half, n_samples)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "b"])
        for x, v in zip(xs, evaluate(prof, xs)):
            w.writerow([repr(float(x)), repr(float(v))])


def profile_json(prof: BarenblattProfile) -> str:
    return json.dumps(prof.summary(), sort_keys=True)
