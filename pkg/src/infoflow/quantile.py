"""Lagrangian (quantile) representation of probability densities on the line.

A state is the vector of positions X_1 < ... < X_N of N particles of mass 1/N,
X_i being the inverse CDF at the cell-centred mass m_i = (i - 1/2)/N.  In these
coordinates the Wasserstein distance is a weighted Euclidean distance and the
density between two neighbours is u = 1/X', with X' = N (X_{i+1} - X_i).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    DegenerateState,
    GridMismatch,
    MassNotNormalized,
    MismatchedResolution,
    NonpositiveScale,
    ZeroDensityPlateau,
)

MIN_POINTS = 8
GAP_FLOOR = 1e-12  # relative to the particle spread


def mass_grid(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def gap_floor(x: np.ndarray) -> float:
    return GAP_FLOOR * float(x[-1] - x[0])


@dataclass(frozen=True, eq=False)
class QuantileDensity:
    positions: np.ndarray

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim != 1 or x.size < MIN_POINTS:
            raise DegenerateState(f"need a 1-d array of at least {MIN_POINTS} positions")
        if not np.all(np.isfinite(x)):
            raise DegenerateState("non-finite positions")
        if np.any(np.diff(x) <= 0.0):
            raise DegenerateState("positions must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @property
    def n_points(self) -> int:
        return self.positions.size

    @property
    def masses(self) -> np.ndarray:
        return mass_grid(self.n_points)

    @property
    def total_mass(self) -> float:
        return 1.0

    @property
    def stretch(self) -> np.ndarray:
        """X' = N (X_{i+1} - X_i) on the N - 1 half-integer nodes."""
        return self.n_points * np.diff(self.positions)

    def mean(self) -> float:
        return float(np.mean(self.positions))

    def translate(self, c: float) -> "QuantileDensity":
        return QuantileDensity(self.positions + c)

    def check_gaps(self) -> None:
        x = self.positions
        if np.min(np.diff(x)) < gap_floor(x):
            raise DegenerateState("minimum gap below the configured floor")

    def __eq__(self, other):
        if not isinstance(other, QuantileDensity):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    __hash__ = None


def wasserstein_distance(a: QuantileDensity, b: QuantileDensity) -> float:
    if a.n_points != b.n_points:
        raise MismatchedResolution(f"{a.n_points} vs {b.n_points} points")
    return float(np.sqrt(np.mean((a.positions - b.positions) ** 2)))


def dilate(a: QuantileDensity, r: float) -> QuantileDensity:
    """Mass preserving dilation: the density r^{-1} u(x / r)."""
    if not r > 0:
        raise NonpositiveScale(f"dilation factor {r} must be positive")
    return QuantileDensity(r * a.positions)


def second_moment(a: QuantileDensity) -> float:
    return float(np.mean(a.positions ** 2))


@dataclass(frozen=True, eq=False)
class EulerianDensity:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.ndim != 1 or g.size < 3:
            raise GridMismatch("grid and values must be 1-d arrays of equal length")
        h = np.diff(g)
        if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
            raise GridMismatch("grid must be uniform and increasing")
        if np.any(v < 0):
            raise MassNotNormalized("negative density values")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def support_window(a: QuantileDensity) -> tuple[float, float]:
    """Interval carrying the whole reconstructed mass of ``a``."""
    x = a.positions
    g = np.diff(x)
    return x[0] - 1.5 * g[0], x[-1] + 1.5 * g[-1]


def uniform_grid(lo: float, hi: float, grid_size: int) -> np.ndarray:
    """``grid_size`` nodes covering [lo, hi] with one spare spacing on each side."""
    h = (hi - lo) / (grid_size - 3)
    return lo - h + h * np.arange(grid_size)


def common_grid(states, grid_size: int) -> np.ndarray:
    los, his = zip(*(support_window(s) for s in states))
    return uniform_grid(min(los), max(his), grid_size)


def _density_interpolant(a: QuantileDensity) -> PchipInterpolator:
    # density values 1/X' at gap midpoints, ramped linearly to zero so that the
    # outermost half cell plus half gap (mass 1/N) sits outside the first midpoint
    x = a.positions
    g = np.diff(x)
    u = 1.0 / (a.n_points * g)
    xc = 0.5 * (x[1:] + x[:-1])
    lo, hi = support_window(a)
    nodes = np.concatenate([[lo], xc, [hi]])
    vals = np.concatenate([[0.0], u, [0.0]])
    return PchipInterpolator(nodes, vals, extrapolate=False)


def to_eulerian(a: QuantileDensity, grid_size: int = 400, grid: np.ndarray | None = None) -> EulerianDensity:
    """Sample the density of ``a`` on a uniform grid, renormalised to unit mass.

    Without an explicit ``grid`` the grid spans the reconstruction support with
    one extra spacing on either side, so the sampled values vanish at both ends.
    """
    if grid is None:
        if grid_size < 32:
            raise GridMismatch("grid_size must be at least 32")
        a.check_gaps()
        grid = uniform_grid(*support_window(a), grid_size)
    else:
        a.check_gaps()
        grid = np.asarray(grid, dtype=float)
    vals = np.nan_to_num(_density_interpolant(a)(grid), nan=0.0)
    vals = np.maximum(vals, 0.0)
    mass = np.trapezoid(vals, grid)
    if not mass > 0:
        raise DegenerateState("reconstructed density has no mass on the grid")
    return EulerianDensity(grid, vals / mass)


def from_eulerian(u: EulerianDensity, n_points: int) -> QuantileDensity:
    """Invert the trapezoidal CDF of ``u`` at the cell-centred masses.

    Flat CDF spans (vacuum) are crossed by left-continuous inversion, so the
    quantiles jump over the gap.
    """
    mass = u.mass()
    if abs(mass - 1.0) > 1e-4:
        raise MassNotNormalized(f"mass {mass} differs from 1")
    x, v = u.grid, u.values
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(x))]) / mass
    m = mass_grid(n_points)
    j = np.searchsorted(cdf, m, side="left")
    j = np.clip(j, 1, x.size - 1)
    c0, c1 = cdf[j - 1], cdf[j]
    w = (m - c0) / (c1 - c0)
    pos = x[j - 1] + w * (x[j] - x[j - 1])
    if np.any(np.diff(pos) <= 0):
        raise ZeroDensityPlateau("quantiles collapsed on a flat CDF span")
    return QuantileDensity(pos)


def l1_distance(u: EulerianDensity, v: EulerianDensity) -> float:
    if u.grid.shape != v.grid.shape or not np.allclose(u.grid, v.grid, rtol=0, atol=1e-12):
        raise GridMismatch("densities live on different grids")
    return float(np.trapezoid(np.abs(u.values - v.values), u.grid))


def write_state_csv(a: QuantileDensity, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "x"])
        for m, x in zip(a.masses, a.positions):
            w.writerow([repr(float(m)), repr(float(x))])


def read_state_csv(path) -> QuantileDensity:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return QuantileDensity(np.array([float(r["x"]) for r in rows]))
