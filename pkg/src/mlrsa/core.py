"""Shared types, unit conventions, seeding and quadrature.

Everything downstream works with sigma = 1.  Physical inputs are rescaled on
entry (lengths by sigma, times into dimensionless tau) and rescaled back when
results leave a module.

  1D:  tau = rate * sigma * t
  2D:  tau = rate * kappa * t,   kappa = pi * sigma**2 / 4
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

DEFAULT_QUAD_TOL = 1e-9
# Cap on Poisson arrivals for one run: 8 bytes x 4 arrays x 4e8 is already ~13 GB.
MAX_ARRIVALS = 400_000_000


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, abserr: float):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class ArrivalBudgetError(MemoryError):
    pass


def _check_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class Params1D:
    """Deposition of hard rods on a periodic line."""

    sigma: float = 1.0
    rate: float = 1.0
    num_colors: int = 2
    domain_length: float = 1e4
    horizon: float = 10.0
    seed: int = 0

    def __post_init__(self):
        _check_positive("sigma", self.sigma)
        _check_positive("rate", self.rate)
        if int(self.num_colors) != self.num_colors or self.num_colors < 1:
            raise ValueError(f"num_colors must be an integer >= 1, got {self.num_colors!r}")
        if not self.domain_length >= 10 * self.sigma:
            raise ValueError(
                f"domain_length must be >= 10*sigma ({10 * self.sigma}), got {self.domain_length!r}"
            )
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be finite and >= 0, got {self.horizon!r}")

    @property
    def tau_max(self) -> float:
        return self.rate * self.sigma * self.horizon

    @property
    def length(self) -> float:
        """Domain length in units of sigma."""
        return self.domain_length / self.sigma

    def to_tau(self, t):
        return np.asarray(t, dtype=float) * (self.rate * self.sigma)

    def from_tau(self, tau):
        return np.asarray(tau, dtype=float) / (self.rate * self.sigma)

    @classmethod
    def from_tau_horizon(cls, tau_max: float, **kw) -> "Params1D":
        """Build parameters whose horizon corresponds to `tau_max`."""
        sigma = kw.get("sigma", 1.0)
        rate = kw.get("rate", 1.0)
        return cls(horizon=tau_max / (rate * sigma), **kw)


@dataclass(frozen=True)
class Params2D:
    """Deposition of hard circles (diameter sigma) on a periodic square."""

    sigma: float = 1.0
    rate: float = 1.0
    num_colors: int = 2
    domain_side: float = 100.0
    horizon: float = 10.0
    seed: int = 0

    def __post_init__(self):
        _check_positive("sigma", self.sigma)
        _check_positive("rate", self.rate)
        if int(self.num_colors) != self.num_colors or self.num_colors < 1:
            raise ValueError(f"num_colors must be an integer >= 1, got {self.num_colors!r}")
        if not self.domain_side >= 10 * self.sigma:
            raise ValueError(
                f"domain_side must be >= 10*sigma ({10 * self.sigma}), got {self.domain_side!r}"
            )
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be finite and >= 0, got {self.horizon!r}")

    @property
    def kappa(self) -> float:
        return math.pi * self.sigma**2 / 4

    @property
    def tau_max(self) -> float:
        return self.rate * self.kappa * self.horizon

    @property
    def side(self) -> float:
        """Domain side in units of sigma."""
        return self.domain_side / self.sigma

    def to_tau(self, t):
        return np.asarray(t, dtype=float) * (self.rate * self.kappa)

    def from_tau(self, tau):
        return np.asarray(tau, dtype=float) / (self.rate * self.kappa)

    @classmethod
    def from_tau_horizon(cls, tau_max: float, **kw) -> "Params2D":
        sigma = kw.get("sigma", 1.0)
        rate = kw.get("rate", 1.0)
        return cls(horizon=tau_max / (rate * math.pi * sigma**2 / 4), **kw)


@dataclass(frozen=True)
class ColorId:
    index: int
    num_colors: int

    def __post_init__(self):
        if not 0 <= self.index < self.num_colors:
            raise ValueError(f"color index {self.index} outside [0, {self.num_colors})")

    def __int__(self):
        return self.index


@dataclass(frozen=True)
class DensityCurve:
    """Per-color density (1D) or coverage (2D) on a time grid.

    ``values`` and ``stderr`` have shape ``(len(times), K)``.  Analytic curves
    carry a zero ``stderr``.
    """

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray = None
    tau: np.ndarray = None
    replications: int = 1

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.shape[0] != times.size:
            values = values.T
        if values.shape[0] != times.size:
            raise ValueError("values must have one row per sample time")
        stderr = np.zeros_like(values) if self.stderr is None else np.asarray(self.stderr, float)
        if stderr.shape != values.shape:
            raise ValueError("stderr must match values in shape")
        tau = times if self.tau is None else np.asarray(self.tau, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)
        object.__setattr__(self, "tau", tau)

    @property
    def num_colors(self) -> int:
        return self.values.shape[1]

    def mean_over_colors(self) -> np.ndarray:
        return self.values.mean(axis=1)

    def stderr_over_colors(self) -> np.ndarray:
        """Standard error of the color-averaged value.

        Colors within one run are correlated; treating them as independent
        would understate the error, so the per-color errors are averaged
        instead (exact for perfectly correlated colors, conservative otherwise).
        """
        return self.stderr.mean(axis=1)

    def is_monotone(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.values, axis=0) >= -atol))


def quadrature(f: Callable[[float], float], a: float, b: float,
               tol: float = DEFAULT_QUAD_TOL, limit: int = 200) -> float:
    """Adaptive Gauss-Kronrod integral of `f` over [a, b].

    The estimated error satisfies ``err <= tol * max(1, |I|)``; otherwise a
    :class:`QuadratureError` carrying the best estimate is raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if b < a:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=limit)
    if abserr > tol * max(1.0, abs(value)):
        detail = f": {caught[0].message}" if caught else ""
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge{detail}", value, abserr)
    return float(value)


def seeded_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent reproducible generator for replication `stream` of `seed`.

    Streams are derived with ``SeedSequence`` spawn keys, so they do not depend
    on how many streams exist or which thread consumes them.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Counters:
    attempted: int = 0
    admitted: int = 0
    rejected: int = 0

    def as_dict(self) -> dict:
        return {"attempted": self.attempted, "admitted": self.admitted, "rejected": self.rejected}


def slab_bounds(expected_total: float, tau_max: float, per_slab: float = 2e6) -> np.ndarray:
    """Time-slab boundaries so that each slab holds ~`per_slab` arrivals."""
    if expected_total > MAX_ARRIVALS:
        raise ArrivalBudgetError(
            f"expected {expected_total:.3g} arrivals exceeds the budget of {MAX_ARRIVALS:.0e}; "
            "reduce the domain size or the horizon"
        )
    n = max(1, int(math.ceil(expected_total / per_slab)))
    return np.linspace(0.0, tau_max, n + 1)


def stack_replications(runs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over a list of equally shaped arrays."""
    arr = np.stack(runs)
    mean = arr.mean(axis=0)
    if arr.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])


__all__ = [
    "ArrivalBudgetError", "ColorId", "Counters", "DEFAULT_QUAD_TOL", "DensityCurve",
    "Params1D", "Params2D", "QuadratureError", "quadrature", "seeded_rng",
    "slab_bounds", "stack_replications",
]
