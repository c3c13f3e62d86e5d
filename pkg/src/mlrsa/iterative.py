"""Per-color density from repeated use of the monolayer (Renyi) solution.

The random color rule is traded for a sequential one (try color 1, then 2,
...) that admits the same total number of rods.  Layer k of the sequential
scheme is treated as a monolayer fed by the arrivals the earlier layers did
not take, and the per-color density is the layer average.

All quantities here are dimensionless: tau = rate*sigma*t, densities sigma*rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import exp1

from .core import quadrature

U_MAX = 1e3
_GAMMA = float(np.euler_gamma)
# Renyi's jamming density, sigma*rho(inf)
RENYI_JAMMING = 0.7475979202534114


def ein(u):
    """Entire exponential integral, Ein(u) = int_0^u (1 - e^-x)/x dx."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 1e-2
    s = u[small]
    # alternating series, truncated well below double precision for u < 0.01
    out[small] = s - s**2 / 4 + s**3 / 18 - s**4 / 96 + s**5 / 600
    big = ~small
    out[big] = _GAMMA + np.log(u[big]) + exp1(u[big])
    return out


def kernel(u):
    """Monolayer integrand k(u) = exp(-2 Ein(u))."""
    return np.exp(-2.0 * ein(u))


@dataclass(frozen=True)
class MonolayerKernelTable:
    """Tabulated F(tau) = int_0^tau k(u) du with Hermite interpolation.

    Nodes are spaced finely near 0 and log-spaced out to ``U_MAX``.  Past
    ``U_MAX`` the exponential integral in k is below 1e-430, so
    k(u) = e^{-2 gamma} / u^2 there and the tail is integrated in closed form.
    """

    u: np.ndarray
    k: np.ndarray
    F: np.ndarray

    @classmethod
    def build(cls, u_max: float = U_MAX, tol: float = 1e-13) -> "MonolayerKernelTable":
        grid = np.unique(np.concatenate([
            np.linspace(0.0, 1.0, 401),
            np.geomspace(1.0, u_max, 2001),
        ]))
        f = lambda x: float(kernel(np.array([x]))[0])
        pieces = [quadrature(f, a, b, tol=tol) for a, b in zip(grid[:-1], grid[1:])]
        F = np.concatenate([[0.0], np.cumsum(pieces)])
        return cls(grid, kernel(grid), F)

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.u, self.F, self.k))

    @property
    def u_max(self) -> float:
        return float(self.u[-1])

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.empty_like(tau)
        inside = tau <= self.u_max
        out[inside] = self._spline(tau[inside])
        t = tau[~inside]
        out[~inside] = self.F[-1] + math.exp(-2 * _GAMMA) * (1.0 / self.u_max - 1.0 / t)
        return out


@lru_cache(maxsize=1)
def kernel_table() -> MonolayerKernelTable:
    return MonolayerKernelTable.build()


def renyi_F(tau):
    """Monolayer density sigma*rho at dimensionless time tau (scalar or array)."""
    arr = np.asarray(tau, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("tau must be >= 0")
    out = kernel_table()(np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def renyi_F_direct(tau: float, tol: float = 1e-12) -> float:
    """Same integral by direct adaptive quadrature (no table)."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    f = lambda x: float(kernel(np.array([x]))[0])
    edges = [0.0] + [e for e in (1.0, 10.0, 100.0) if e < tau] + [tau]
    return sum(quadrature(f, a, b, tol=tol) for a, b in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class SequentialDensities:
    tau: float
    per_layer: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_layer.sum())


def sequential_densities(tau: float, num_colors: int) -> SequentialDensities:
    """Layer densities of the sequential scheme with adjusted arrival counts.

    Layer k sees ``tau - sum_{i<k} layer_i`` arrivals per sigma, all layers
    evaluated at the same tau; a negative remainder is clamped to zero.
    """
    if num_colors < 1:
        raise ValueError("num_colors must be >= 1")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    layers = np.empty(num_colors)
    used = 0.0
    for k in range(num_colors):
        layers[k] = renyi_F(max(tau - used, 0.0))
        used += layers[k]
    return SequentialDensities(float(tau), layers)


def density_iterative(tau, num_colors: int):
    """Per-color density sigma*rho_i, the same for every color."""
    arr = np.asarray(tau, dtype=float)
    vals = np.array([sequential_densities(float(t), num_colors).total / num_colors
                     for t in np.atleast_1d(arr)])
    return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)
