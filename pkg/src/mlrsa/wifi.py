"""Co-channel access-point planning from the 2D multilayer coverage.

Access points that sense a channel busy within distance d_inh skip it, so
each channel's APs form one color layer of a 2D multilayer RSA with circle
diameter d_inh.  Coverage depends on d_inh and the cumulative AP density
lambda_t only through tau = (pi d_inh^2 / 4) * lambda_t, which the planner
solves for once and then maps back to d_inh.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kinetics2d import DEFAULT_MODEL, JAMMING_COVERAGE, RetentionModel, multilayer_2d

PRESETS = {"2.4GHz": 11, "5GHz": 23}


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class RadioParams:
    transmit_power: float
    sensing_threshold: float
    path_loss_exponent: float = 4.0

    def __post_init__(self):
        for name in ("transmit_power", "sensing_threshold", "path_loss_exponent"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 2.0 <= self.path_loss_exponent <= 6.0:
            warnings.warn(f"path-loss exponent {self.path_loss_exponent} outside the usual [2, 6]",
                          stacklevel=2)


@dataclass(frozen=True)
class PlanQuery:
    ap_density: float
    num_channels: int
    target_fraction: float = 0.7

    def __post_init__(self):
        if not self.ap_density > 0:
            raise ValueError("ap_density must be positive")
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        if not 0 < self.target_fraction < 1:
            raise ValueError("target_fraction must lie in (0, 1)")


def inhibition_distance(radio: RadioParams) -> float:
    """Distance at which received power P_t r^-alpha drops to the sensing threshold."""
    return (radio.sensing_threshold / radio.transmit_power) ** (-1.0 / radio.path_loss_exponent)


def _tau(d_inh: float, lambda_t: float) -> float:
    return math.pi * d_inh**2 / 4 * lambda_t


def coverage_at(d_inh: float, lambda_t: float, num_channels: int,
                model: RetentionModel = DEFAULT_MODEL) -> float:
    """Area fraction covered by the APs of one channel."""
    if d_inh < 0 or lambda_t < 0:
        raise ValueError("d_inh and lambda_t must be non-negative")
    return multilayer_2d(_tau(d_inh, lambda_t), num_channels, model).per_color


def _coverage_tau(tau: float, k: int, model: RetentionModel) -> float:
    return multilayer_2d(tau, k, model).per_color


def solve_tau(num_channels: int, target_fraction: float = 0.7,
              model: RetentionModel = DEFAULT_MODEL, tol: float = 1e-13) -> float:
    """Dimensionless load tau at which per-channel coverage hits the target."""
    target = target_fraction * JAMMING_COVERAGE
    lo, hi = 0.0, 1.0
    tau_cap = 1e8
    while _coverage_tau(hi, num_channels, model) < target:
        lo, hi = hi, 2.0 * hi
        if hi > tau_cap:
            top = _coverage_tau(tau_cap, num_channels, model)
            raise PlanningError(
                f"target coverage {target:.6g} not reached; attainable range is [0, {top:.6g})")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _coverage_tau(mid, num_channels, model) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def plan_dinh(query: PlanQuery, model: RetentionModel = DEFAULT_MODEL) -> float:
    """Inhibition distance giving the target per-channel coverage at this AP density."""
    tau = solve_tau(query.num_channels, query.target_fraction, model)
    return math.sqrt(4.0 * tau / (math.pi * query.ap_density))


def plan_curve(lambda_grid, num_channels: int, target_fraction: float = 0.7,
               model: RetentionModel = DEFAULT_MODEL) -> np.ndarray:
    """Rows of (lambda_t, d_inh) over an ascending density grid."""
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.ndim != 1 or np.any(np.diff(lam) <= 0) or np.any(lam <= 0):
        raise ValueError("lambda_grid must be positive and strictly ascending")
    tau = solve_tau(num_channels, target_fraction, model)
    d = np.sqrt(4.0 * tau / (math.pi * lam))
    return np.column_stack([lam, d])
