"""Entropy, information and related operators on quantile and sampled states.

Lagrangian kernels work on raw position arrays and return values, Euclidean
gradients in x and banded Hessians; they feed the implicit step solver.  With
gaps g_k = x_{k+1} - x_k, stretches s_k = N g_k and z_k = s_k^{-(alpha + 1/2)},

    H_0 = theta / (alpha - 1/2) * ((1/N) sum s_k^{1/2 - alpha} - 1)    (alpha > 1/2)
    H_0 = -(1/2) (1/N) sum log s_k                                     (alpha = 1/2)
    F_0 = N theta^2 sum_{i=0}^{N-1} (z_i - z_{i-1})^2,   z_{-1} = z_{N-1} = 0.

F_0 is the squared slope of H_0 in the weighted metric <a, b> = (1/N) sum a_i b_i,
so the discrete pair inherits the exact identities linking the two functionals
(scaling degree, slope relation, Lambda-convexity of H).  Both carry the
confinement (c/2) m_2 with c = lam for F and c = capital_lambda for H.

Sampled-grid operators (information density, weak operator, Hessian seminorm)
are used for diagnostics only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

from .errors import DegenerateState, InsufficientDerivatives
from .params import ModelParameters
from .quantile import EulerianDensity, QuantileDensity, gap_floor


# ---------------------------------------------------------------------------
# Lagrangian kernels


def _stretch(x: np.ndarray) -> np.ndarray:
    n = x.size
    s = n * np.diff(x)
    floor = n * gap_floor(x)
    return np.maximum(s, floor)


def floor_hits(x: np.ndarray) -> int:
    """Number of gaps at or below the gap floor."""
    return int(np.sum(np.diff(x) <= gap_floor(x)))


def _power(p: ModelParameters) -> float:
    return p.alpha + 0.5


def _diff_ext(z: np.ndarray) -> np.ndarray:
    # (Dz)_i = z_i - z_{i-1} for i = 0..N-1 with zero padding
    return np.diff(np.concatenate([[0.0], z, [0.0]]))


def _gt(v: np.ndarray) -> np.ndarray:
    # transpose of the gap operator: (G^T v)_i = v_{i-1} - v_i
    return -np.diff(np.concatenate([[0.0], v, [0.0]]))


def _pentadiagonal(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Upper banded form of G^T T G for the tridiagonal T = (diag a, offdiag b)."""
    n = a.size + 1
    ap = np.concatenate([[0.0], a, [0.0]])  # ap[i] = a_{i-1}
    bp = np.concatenate([[0.0, 0.0], b, [0.0, 0.0]])  # bp[i+1] = b_{i-1}
    i = np.arange(n)
    diag = ap[i] + ap[i + 1] - 2.0 * bp[i + 1]
    j = i[:-1]
    up1 = bp[j + 1] - ap[j + 1] + bp[j + 2]
    up2 = -b
    ab = np.zeros((3, n))
    ab[2] = diag
    ab[1, 1:] = up1
    ab[0, 2:] = up2
    return ab


def entropy0_value(x: np.ndarray, p: ModelParameters) -> float:
    s = _stretch(x)
    n = x.size
    if p.is_log_case:
        return float(-0.5 * np.sum(np.log(s)) / n)
    a = p.alpha - 0.5
    return float(p.theta / a * (np.sum(s ** (-a)) / n - 1.0))


def entropy_value(x: np.ndarray, p: ModelParameters) -> float:
    return entropy0_value(x, p) + 0.5 * p.capital_lambda * float(np.mean(x * x))


def entropy_grad(x: np.ndarray, p: ModelParameters) -> np.ndarray:
    s = _stretch(x)
    z = s ** (-_power(p))
    return _gt(-p.theta * z) + p.capital_lambda * x / x.size


def entropy_hess_banded(x: np.ndarray, p: ModelParameters) -> np.ndarray:
    n = x.size
    s = _stretch(x)
    q = _power(p)
    a = p.theta * q * n * s ** (-q - 1.0)
    ab = _pentadiagonal(a, np.zeros(n - 2))
    ab[2] += p.capital_lambda / n
    return ab


def information0_value(x: np.ndarray, p: ModelParameters) -> float:
    n = x.size
    z = _stretch(x) ** (-_power(p))
    dz = _diff_ext(z)
    return float(n * p.theta ** 2 * np.dot(dz, dz))


def information_value(x: np.ndarray, p: ModelParameters) -> float:
    return information0_value(x, p) + 0.5 * p.lam * float(np.mean(x * x))


def _info_parts(x: np.ndarray, p: ModelParameters):
    n = x.size
    s = _stretch(x)
    q = _power(p)
    z = s ** (-q)
    dz = _diff_ext(z)
    r = -2.0 * n * p.theta ** 2 * np.diff(dz)  # 2 N theta^2 D^T D z
    z1 = -q * n * z / s
    return n, s, q, z, r, z1


def information_grad(x: np.ndarray, p: ModelParameters) -> np.ndarray:
    n, _, _, _, r, z1 = _info_parts(x, p)
    return _gt(r * z1) + p.lam * x / n


def information_hess_banded(x: np.ndarray, p: ModelParameters) -> np.ndarray:
    n, s, q, z, r, z1 = _info_parts(x, p)
    z2 = q * (q + 1.0) * n * n * s ** (-q - 2.0)
    c = 2.0 * n * p.theta ** 2
    a = c * 2.0 * z1 * z1 + r * z2
    b = -c * z1[:-1] * z1[1:]
    ab = _pentadiagonal(a, b)
    ab[2] += p.lam / n
    return ab


def log_entropy_value(x: np.ndarray) -> float:
    return float(-np.sum(np.log(_stretch(x))) / x.size)


def log_entropy_grad(x: np.ndarray) -> np.ndarray:
    return _gt(-1.0 / _stretch(x)) / x.size


# ---------------------------------------------------------------------------
# state-level functionals


def _checked(a: QuantileDensity) -> np.ndarray:
    x = a.positions
    if not np.all(np.isfinite(x)):
        raise DegenerateState("non-finite positions")
    return x


def information(a: QuantileDensity, p: ModelParameters) -> float:
    """Discrete information F = (1/2 alpha) int |D u^alpha|^2 + (lam/2) m_2."""
    return information_value(_checked(a), p)


def entropy(a: QuantileDensity, p: ModelParameters) -> float:
    """Discrete entropy H with confinement (capital_lambda/2) m_2."""
    return entropy_value(_checked(a), p)


def log_entropy(a: QuantileDensity) -> float:
    """int u log u, computed as -(1/N) sum log X'."""
    return log_entropy_value(_checked(a))


def metric_gradient_entropy(a: QuantileDensity, p: ModelParameters) -> np.ndarray:
    return a.n_points * entropy_grad(a.positions, p)


def entropy_slope_squared(a: QuantileDensity, p: ModelParameters) -> float:
    """Squared metric slope of H.

    Equals F - (delta - 2) capital_lambda H - 2 theta capital_lambda exactly for
    alpha > 1/2; for alpha = 1/2 the discrete log entropy shifts the constant by
    capital_lambda / N.
    """
    g = metric_gradient_entropy(a, p)
    return float(np.mean(g * g))


def dilation_derivative(a: QuantileDensity, p: ModelParameters) -> float:
    """d/ds F[dilate(a, exp(-s))] at s = 0, i.e. delta F_0 - lam m_2."""
    x = _checked(a)
    return p.delta * information0_value(x, p) - p.lam * float(np.mean(x * x))


def lagrangian_N(a: QuantileDensity, p: ModelParameters, zeta: "TestFunction") -> float:
    """Directional derivative of F along x -> x + s zeta'(x) at s = 0."""
    x = _checked(a)
    return float(np.dot(information_grad(x, p), zeta.d1(x)))


def lagrangian_hessian_seminorm(a: QuantileDensity, alpha: float) -> float:
    """int (sigma'')^2 with sigma = u^alpha sampled at gap midpoints.

    Three-point second differences on the nonuniform midpoint grid, integrated
    over the interior midpoints with their Voronoi weights.
    """
    x = _checked(a)
    n = x.size
    xc = 0.5 * (x[1:] + x[:-1])
    sig = (n * np.diff(x)) ** (-alpha)
    hl = xc[1:-1] - xc[:-2]
    hr = xc[2:] - xc[1:-1]
    d2 = 2.0 * ((sig[2:] - sig[1:-1]) / hr - (sig[1:-1] - sig[:-2]) / hl) / (hl + hr)
    w = 0.5 * (hl + hr)
    return float(np.sum(d2 * d2 * w))


# ---------------------------------------------------------------------------
# sampled-grid operators


def eulerian_information(u: EulerianDensity, alpha: float, lam: float = 0.0) -> float:
    """(1/2 alpha) int |D u^alpha|^2 + (lam/2) int x^2 u on a uniform grid.

    Written as (alpha/2) u^{2 alpha - 2} (u')^2 with cell midpoints, which is a
    jointly convex function of neighbouring values for alpha in [1/2, 1].
    """
    v, h = u.values, u.spacing
    um = 0.5 * (v[1:] + v[:-1])
    du = np.diff(v) / h
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(um > 0, 0.5 * alpha * um ** (2 * alpha - 2) * du * du, 0.0)
    return float(np.sum(dens) * h + 0.5 * lam * np.trapezoid(u.grid ** 2 * v, u.grid))


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with exact derivatives and curvature bound ``kappa``."""

    __test__ = False  # keep pytest from collecting the class

    name: str
    f: Callable
    d1: Callable
    d2: Callable
    d3: Callable | None
    kappa: float

    @classmethod
    def from_sympy(cls, name: str, expr, window=(-10.0, 10.0), samples=20001) -> "TestFunction":
        xs = sp.Symbol("x", real=True)
        expr = sp.sympify(expr, locals={"x": xs})
        derivs = [expr]
        for _ in range(3):
            derivs.append(sp.diff(derivs[-1], xs))
        fns = [_vectorized(sp.lambdify(xs, e, "numpy")) for e in derivs]
        grid = np.linspace(*window, samples)
        kappa = 1.01 * float(np.max(np.abs(fns[2](grid))))
        return cls(name, *fns, kappa=kappa)


def _vectorized(fn):
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(fn(x), x.shape).astype(float)

    return wrapped


def weak_operator_N(u: EulerianDensity, p: ModelParameters, zeta: TestFunction) -> float:
    """Weak first variation of F_0 in direction zeta' (one dimension).

    N = -(1/2 alpha) int [alpha (sigma^2)' zeta''' + (2 alpha + 1) (sigma')^2 zeta''] dx,
    sigma = u^alpha.  It is the derivative of F_0 along the push-forward by
    x -> x + s zeta'(x).
    """
    if zeta.d3 is None:
        raise InsufficientDerivatives("test function lacks a third derivative")
    a = p.alpha
    x, h = u.grid, u.spacing
    sig = u.values ** a
    xm = 0.5 * (x[1:] + x[:-1])
    dsig = np.diff(sig) / h
    dsig2 = np.diff(sig * sig) / h
    integrand = a * dsig2 * zeta.d3(xm) + (2 * a + 1) * dsig * dsig * zeta.d2(xm)
    return float(-np.sum(integrand) * h / (2 * a))


def hessian_seminorm(u: EulerianDensity, alpha: float) -> float:
    """int (sigma'')^2 dx with sigma = u^alpha, by second differences."""
    sig = u.values ** alpha
    h = u.spacing
    d2 = (sig[2:] - 2 * sig[1:-1] + sig[:-2]) / (h * h)
    return float(np.sum(d2 * d2) * h)
