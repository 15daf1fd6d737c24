"""Scalar model parameters and the constants derived from them."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BadDimension, NegativeConfinement, OutOfRange


@dataclass(frozen=True)
class ModelParameters:
    """Exponent ``alpha``, confinement ``lam``, dimension ``dim`` and derived constants.

    ``theta`` is the porous-medium diffusion prefactor sqrt(2 alpha)/(2 alpha + 1),
    ``delta`` the scaling degree (2 alpha - 1) d + 2 of the unconfined information,
    ``capital_lambda`` = sqrt(lam / delta) the entropy's convexity modulus,
    ``beta`` = (1 - alpha)/alpha and ``c0`` the heat-flow dissipation constant.
    """

    alpha: float
    lam: float
    dim: int
    theta: float
    capital_lambda: float
    delta: float
    beta: float
    c0: float

    @property
    def is_log_case(self) -> bool:
        return self.alpha == 0.5

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "d": self.dim,
            "theta": self.theta,
            "capital_lambda": self.capital_lambda,
            "delta": self.delta,
            "beta": self.beta,
            "c0": self.c0,
        }


def derive_params(alpha: float, lam: float, dim: int = 1) -> ModelParameters:
    alpha = float(alpha)
    lam = float(lam)
    if not (0.5 <= alpha <= 1.0) or math.isnan(alpha):
        raise OutOfRange(f"alpha={alpha} outside [1/2, 1]")
    if not lam >= 0.0:
        raise NegativeConfinement(f"lambda={lam} must be >= 0")
    if int(dim) != dim or dim < 1:
        raise BadDimension(f"dim={dim} must be a positive integer")
    dim = int(dim)
    theta = math.sqrt(2.0 * alpha) / (2.0 * alpha + 1.0)
    delta = (2.0 * alpha - 1.0) * dim + 2.0
    capital_lambda = math.sqrt(lam / delta)
    beta = (1.0 - alpha) / alpha
    c0 = (1.0 / alpha) * (1.0 - beta * (dim - 1) ** 2 / (dim * (dim + 2)))
    return ModelParameters(alpha, lam, dim, theta, capital_lambda, delta, beta, c0)
