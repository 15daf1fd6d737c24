"""Implicit Wasserstein schemes for information and entropy functionals on the line."""
from __future__ import annotations

from .barenblatt import (
    BarenblattProfile,
    discrete_equilibrium,
    evaluate,
    self_similar,
    stationary_profile,
    to_quantile,
)
from .functionals import (
    TestFunction,
    dilation_derivative,
    entropy,
    entropy_slope_squared,
    hessian_seminorm,
    information,
    log_entropy,
    weak_operator_N,
)
from .jko import Functional, JkoConfig, JkoStepRecord, Partition, Trajectory, jko_step, run_trajectory
from .params import ModelParameters, derive_params
from .quantile import (
    EulerianDensity,
    QuantileDensity,
    dilate,
    from_eulerian,
    l1_distance,
    second_moment,
    to_eulerian,
    wasserstein_distance,
)

__all__ = [
    "BarenblattProfile", "EulerianDensity", "Functional", "JkoConfig", "JkoStepRecord",
    "ModelParameters", "Partition", "QuantileDensity", "TestFunction", "Trajectory",
    "derive_params", "dilate", "dilation_derivative", "discrete_equilibrium", "entropy",
    "entropy_slope_squared", "evaluate", "from_eulerian", "hessian_seminorm", "information",
    "jko_step", "l1_distance", "log_entropy", "run_trajectory", "second_moment", "self_similar",
    "stationary_profile", "to_eulerian", "to_quantile", "wasserstein_distance", "weak_operator_N",
]
