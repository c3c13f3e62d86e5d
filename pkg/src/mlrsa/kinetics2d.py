"""2D RSA kinetics: retention probability, monolayer ODE, multilayer recursion.

Dimensionless time is tau = rate * kappa * t with kappa = pi sigma^2 / 4, and
the monolayer coverage theta = kappa * rho obeys

    d theta / d tau = c * phi(theta),    theta(0) = 0

with kinetic constant c = 1 (attempts land uniformly and survive with
probability phi).  The multilayer curves re-use that solution with the time
argument reduced by the coverage already taken by earlier layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import fixed_quad, solve_ivp
from scipy.interpolate import PchipInterpolator

from .core import quadrature

JAMMING_COVERAGE = 0.5474
FIT_COEFFS = (0.8120, 0.4258, 0.0716)
CUBED = "cubed"          # (1 - x)^3
CUBE_ARG = "cube-arg"    # (1 - x^3)


def lens_area(r: float, sigma: float = 1.0) -> float:
    """Intersection area of two circles of radius sigma with centers r apart."""
    if not 0 <= r <= 2 * sigma * (1 + 1e-15):
        raise ValueError(f"r must lie in [0, 2*sigma], got {r}")
    r = min(r, 2 * sigma)
    return 2 * sigma**2 * math.acos(r / (2 * sigma)) - 0.5 * r * math.sqrt(4 * sigma**2 - r * r)


def _lens_area_vec(r: np.ndarray) -> np.ndarray:
    r = np.clip(r, 0.0, 2.0)
    return 2 * np.arccos(r / 2) - 0.5 * r * np.sqrt(4 - r * r)


@lru_cache(maxsize=None)
def series_integrals(method: str = "adaptive") -> tuple[float, float]:
    """(int_1^2 2 pi r A2 dr, int_1^2 2 pi r A2^2 dr) at sigma = 1."""
    f2 = lambda r: 2 * math.pi * r * lens_area(r)
    f3 = lambda r: 2 * math.pi * r * lens_area(r) ** 2
    if method == "adaptive":
        return quadrature(f2, 1.0, 2.0, tol=1e-12), quadrature(f3, 1.0, 2.0, tol=1e-12)
    if method == "gauss":
        # A2 has a sqrt singularity in its derivative at r = 2; substitute r = 2 - s^2
        g2 = lambda s: 2 * s * 2 * math.pi * (2 - s * s) * _lens_area_vec(2 - s * s)
        g3 = lambda s: 2 * s * 2 * math.pi * (2 - s * s) * _lens_area_vec(2 - s * s) ** 2
        return fixed_quad(g2, 0.0, 1.0, n=60)[0], fixed_quad(g3, 0.0, 1.0, n=60)[0]
    raise ValueError(f"unknown method {method!r}")


def series_coefficients(sigma: float = 1.0) -> np.ndarray:
    """Power-series coefficients of the retention probability in rho."""
    i2, i3 = series_integrals()
    s3 = math.pi * (math.sqrt(3) * math.pi - 14 / 3) / 8
    return np.array([1.0, -math.pi * sigma**2, 0.5 * i2 * sigma**4, (i3 / 3 - s3) * sigma**6])


def phi_series(rho, sigma: float = 1.0):
    """Third-order low-density expansion of the retention probability."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be >= 0")
    out = np.polynomial.polynomial.polyval(rho, series_coefficients(sigma))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RetentionModel:
    """Retention probability as a function of coverage theta."""

    variant: str = "fitted"
    coeffs: tuple[float, float, float] = FIT_COEFFS
    jamming: float = JAMMING_COVERAGE
    bracket: str = CUBED

    def __post_init__(self):
        if self.variant not in ("fitted", "series"):
            raise ValueError(f"unknown retention variant {self.variant!r}")
        if self.bracket not in (CUBED, CUBE_ARG):
            raise ValueError(f"unknown bracket {self.bracket!r}")

    @property
    def ceiling(self) -> float:
        return self.jamming if self.variant == "fitted" else math.inf

    def __call__(self, theta):
        if self.variant == "series":
            return np.maximum(phi_series(np.asarray(theta, float) / (math.pi / 4)), 0.0)
        return phi_fit(theta, self)

    def theta_coefficients(self) -> np.ndarray:
        """Coefficients of 1, theta, theta^2, ... of the fitted polynomial."""
        P = np.polynomial.polynomial
        b = np.array([1.0, *self.coeffs])
        bracket = [1.0, -3.0, 3.0, -1.0] if self.bracket == CUBED else [1.0, 0.0, 0.0, -1.0]
        x = P.polymul(b, bracket)
        return x / self.jamming ** np.arange(x.size)


DEFAULT_MODEL = RetentionModel()


def phi_fit(theta, model: RetentionModel = DEFAULT_MODEL):
    """Fitted retention probability, valid on [0, jamming coverage]."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0):
        raise ValueError("theta must be >= 0")
    if np.any(th > model.jamming * (1 + 1e-12)):
        raise ValueError(f"theta exceeds the jamming coverage {model.jamming}")
    x = np.minimum(th / model.jamming, 1.0)
    b1, b2, b3 = model.coeffs
    poly = 1 + x * (b1 + x * (b2 + x * b3))
    bracket = (1 - x) ** 3 if model.bracket == CUBED else 1 - x**3
    out = poly * bracket
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KineticsSolution2D:
    """Monolayer coverage theta(tau), tabulated for fast monotone lookup."""

    tau_grid: np.ndarray
    theta: np.ndarray
    model: RetentionModel
    kinetic_constant: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(self.tau_grid, self.theta))

    @property
    def tau_max(self) -> float:
        return float(self.tau_grid[-1])

    def __call__(self, tau):
        t = np.asarray(tau, dtype=float)
        if np.any(t < 0):
            raise ValueError("tau must be >= 0")
        if np.any(t > self.tau_max):
            raise ValueError(f"tau beyond tabulated range {self.tau_max}")
        out = np.minimum(self._interp(t), self.model.ceiling)
        return float(out) if out.ndim == 0 else out


def _tau_table(tau_max: float) -> np.ndarray:
    dense = np.arange(0.0, min(tau_max, 10.0), 1e-3)
    tail = np.geomspace(10.0, tau_max, max(2, int(200 * math.log10(max(tau_max, 10.0) / 10.0)) + 2)) \
        if tau_max > 10.0 else np.array([])
    return np.unique(np.concatenate([dense, tail, [tau_max]]))


def solve_monolayer_2d(tau_max: float = 1e6, model: RetentionModel = DEFAULT_MODEL,
                       kinetic_constant: float = 1.0, rtol: float = 1e-8) -> KineticsSolution2D:
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    ceiling = model.ceiling

    def rhs(_t, y):
        return [kinetic_constant * float(model(min(max(y[0], 0.0), ceiling)))]

    grid = _tau_table(tau_max)
    sol = solve_ivp(rhs, (0.0, tau_max), [0.0], method="DOP853", t_eval=grid,
                    rtol=rtol, atol=1e-12 * max(1.0, JAMMING_COVERAGE))
    if not sol.success:
        raise RuntimeError(f"monolayer kinetics solve failed: {sol.message}")
    theta = np.maximum.accumulate(np.minimum(sol.y[0], ceiling))
    return KineticsSolution2D(sol.t, theta, model, kinetic_constant)


@lru_cache(maxsize=8)
def monolayer_table(model: RetentionModel = DEFAULT_MODEL,
                    kinetic_constant: float = 1.0) -> KineticsSolution2D:
    return solve_monolayer_2d(1e8, model, kinetic_constant)


@dataclass(frozen=True)
class MultilayerCoverage:
    tau: float
    per_layer: np.ndarray

    @property
    def per_color(self) -> float:
        return float(self.per_layer.mean())


def multilayer_2d(tau: float, num_colors: int, model: RetentionModel = DEFAULT_MODEL,
                  kinetic_constant: float = 1.0) -> MultilayerCoverage:
    """Per-layer coverages of the sequential scheme and their per-color mean."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if num_colors < 1:
        raise ValueError("num_colors must be >= 1")
    mono = monolayer_table(model, kinetic_constant)
    layers = np.empty(num_colors)
    used = 0.0
    for k in range(num_colors):
        layers[k] = mono(max(tau - used, 0.0))
        used += layers[k]
    return MultilayerCoverage(float(tau), layers)


def coverage_per_color(tau, num_colors: int, model: RetentionModel = DEFAULT_MODEL,
                       kinetic_constant: float = 1.0):
    arr = np.asarray(tau, dtype=float)
    vals = np.array([multilayer_2d(float(t), num_colors, model, kinetic_constant).per_color
                     for t in np.atleast_1d(arr)])
    return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)
