"""Gap-density kinetics for one color of the 1D multilayer process.

G(l, t) dl is the number of color-i gaps of length in [l, l+dl) per unit
length.  With a(t) = rate * P[admitted as color i | lands in a color-i gap]:

    dG/dt = a(t) * ( -(l - sigma)^+ G(l, t) + 2 * int_{l+sigma}^inf G(y, t) dy )

which is solved by the method of lines on a uniform l-grid with an explicit
adaptive Runge-Kutta stepper.  The rod density is int G dl.

Internally sigma = rate = 1, so t is the dimensionless tau and the
admission factor is a function of tau2 = 2*tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import RK45

from .core import DensityCurve, Params1D

EXACT_K2 = "exact-K2"
GENERIC = "generic-K"
VARIANTS = (EXACT_K2, GENERIC)


class GapSolverError(RuntimeError):
    pass


def order_stat_constant() -> Fraction:
    """Probability 5/18 used for the two-neighbor configuration at K = 2."""
    return Fraction(5, 18)


def default_variant(num_colors: int) -> str:
    return EXACT_K2 if num_colors == 2 else GENERIC


def admission_factor(tau2, num_colors: int, variant: str | None = None):
    """P[arrival gets color i | it lands in a color-i gap] at tau2 = 2*rate*sigma*t."""
    variant = variant or default_variant(num_colors)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if num_colors < 1:
        raise ValueError("num_colors must be >= 1")
    z = np.asarray(tau2, dtype=float)
    if np.any(z < 0):
        raise ValueError("tau2 must be >= 0")
    if variant == EXACT_K2:
        if num_colors != 2:
            raise ValueError(f"variant {EXACT_K2} needs num_colors == 2, got {num_colors}")
        c = float(order_stat_constant() / 4)
        # large z: both sums are dominated by c*z^2, divide through to avoid overflow
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            inv = np.where(z > 0, 1.0 / np.where(z > 0, z, 1.0), np.inf)
            out = np.where(
                z < 1e100,
                (1 + z + c * z**2) / (2 + z + c * z**2),
                (inv * inv + inv + c) / (2 * inv * inv + inv + c),
            )
    else:
        out = _generic_factor(z, num_colors)
    return float(out) if np.ndim(out) == 0 else out


def _generic_factor(z: np.ndarray, k: int) -> np.ndarray:
    # sum_n z^n/n! over sum_n (k-n) z^n/n!, n < k, evaluated with terms scaled by
    # the largest one so huge z stays finite
    n = np.arange(k, dtype=float)
    zz = np.atleast_1d(z)[:, None]
    with np.errstate(divide="ignore"):
        logt = np.where(zz > 0, n * np.log(np.where(zz > 0, zz, 1.0)), np.where(n == 0, 0.0, -np.inf))
    logt = logt - np.array([math.lgamma(m + 1) for m in n])
    logt -= logt.max(axis=1, keepdims=True)
    w = np.exp(logt)
    out = w.sum(axis=1) / (w * (k - n)).sum(axis=1)
    return out.reshape(np.shape(z))


def seed_gap_density(rho0: float, l_grid: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    """Low-density initial profile normalised so that int (l + sigma) G dl = 1.

    G = rho0^2 / (1 + sigma rho0) * exp(-rho0 l) is the gap law of a Poisson
    set of rods at density rho0/(1 + sigma rho0).
    """
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    if rho0 * sigma > 0.02:
        raise ValueError(f"rho0*sigma = {rho0 * sigma} too large for a low-density seed (max 0.02)")
    l = np.asarray(l_grid, dtype=float)
    return rho0**2 / (1 + sigma * rho0) * np.exp(-rho0 * l)


def trapezoid(y: np.ndarray, dl: float, axis: int = -1) -> np.ndarray:
    y = np.asarray(y)
    return dl * (np.sum(y, axis=axis) - 0.5 * (np.take(y, 0, axis=axis) + np.take(y, -1, axis=axis)))


def density_from_gaps(G: np.ndarray, dl: float) -> float:
    """Rod density int_0^lmax G dl (trapezoid)."""
    return float(trapezoid(G, dl))


def available_fraction(G: np.ndarray, dl: float, sigma: float = 1.0) -> float:
    """Fraction of the line where a new rod could take this color."""
    l = np.arange(G.shape[-1]) * dl
    return float(trapezoid(np.maximum(l - sigma, 0.0) * G, dl))


def gap_moment(G: np.ndarray, dl: float, sigma: float = 1.0) -> float:
    """int (l + sigma) G dl, which equals 1 for any complete partition of the line."""
    l = np.arange(G.shape[-1]) * dl
    return float(trapezoid((l + sigma) * G, dl))


@dataclass(frozen=True)
class GridSpec:
    """Discretisation, in units of sigma.

    ``points_per_sigma`` fixes dl = sigma / points_per_sigma.  ``lmax`` of None
    picks the smallest length whose seeded tail moment is below ``tail_tol``.
    ``prune_tol`` bounds the moment of the far tail dropped while solving.
    """

    points_per_sigma: int = 200
    lmax: float | None = None
    rho0: float = 0.01
    rtol: float = 1e-6
    atol: float = 1e-12
    tail_tol: float = 1e-7
    prune_tol: float = 1e-13

    @property
    def dl(self) -> float:
        return 1.0 / self.points_per_sigma

    def resolved_lmax(self) -> float:
        if self.lmax is not None:
            return float(self.lmax)
        # tail moment of the seed beyond L is (1 + rho0 L + rho0) e^{-rho0 L} / (1 + rho0)
        r = self.rho0
        x = 12.0
        while (1 + x + r) * math.exp(-x) / (1 + r) > self.tail_tol:
            x += 0.5
        return x / r


@dataclass
class GapDensityGrid:
    """Solver output on the stored part of the l-grid.

    ``G[j]`` is the profile at ``t_grid[j]`` (dimensionless tau, sigma = 1) on
    ``l_grid``; ``density``, ``available`` and ``moment`` were computed on the
    full, untruncated solver grid.
    """

    l_grid: np.ndarray
    t_grid: np.ndarray
    G: np.ndarray
    density: np.ndarray
    available: np.ndarray
    moment: np.ndarray
    num_colors: int
    variant: str
    sigma: float = 1.0
    rate: float = 1.0
    tau0: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def dl(self) -> float:
        return float(self.l_grid[1] - self.l_grid[0])

    def physical(self) -> "GapDensityGrid":
        """Copy with lengths, times and densities in physical units."""
        s, r = self.sigma, self.rate
        return GapDensityGrid(
            self.l_grid * s, self.t_grid / (r * s), self.G / s**2, self.density / s,
            self.available, self.moment, self.num_colors, self.variant, s, r,
            self.tau0 / (r * s), dict(self.stats),
        )

    def mass_below(self, cut: float = 1.0) -> np.ndarray:
        """Share of the gap density (number of gaps) on lengths below `cut`."""
        n = int(round(cut / self.dl))
        below = trapezoid(self.G[:, : n + 1], self.dl)
        return below / self.density

    def curve(self) -> DensityCurve:
        vals = np.repeat(self.density[:, None], self.num_colors, axis=1)
        return DensityCurve(self.t_grid, vals, tau=self.t_grid)


class _Rhs:
    """Right-hand side on the current (possibly truncated) grid."""

    def __init__(self, n: int, shift: int, dl: float, factor):
        self.dl = dl
        self.shift = shift
        self.factor = factor
        self.resize(n)

    def resize(self, n: int):
        self.n = n
        self.kill = _conservative_kill(n, self.shift, self.dl)
        self.evals = getattr(self, "evals", 0)

    def __call__(self, t, G):
        self.evals += 1
        # suffix[j] = int_{l_j}^{l_max} G, reverse cumulative trapezoid
        half = 0.5 * self.dl * (G[1:] + G[:-1])
        suffix = np.zeros_like(G)
        suffix[:-1] = np.cumsum(half[::-1])[::-1]
        create = np.zeros_like(G)
        s = self.shift
        if s < G.size:
            create[: G.size - s] = suffix[s:]
        return self.factor(t) * (2.0 * create - self.kill * G)


def _conservative_kill(n: int, shift: int, dl: float) -> np.ndarray:
    """Destruction rate per node, (l - 1)^+ up to the two end nodes.

    Taken as the adjoint of the discrete creation operator under the
    trapezoid moment int (l + 1) G dl, so that moment is conserved exactly by
    the semi-discrete system.  This moves the node at l = sigma from 0 to dl/4.
    """
    l = np.arange(n) * dl
    w = np.full(n, dl)
    w[0] = w[-1] = 0.5 * dl
    f = l + 1.0
    v = np.zeros(n)
    if shift < n:
        v[shift:] = (w * f)[: n - shift]
    before = np.concatenate([[0.0], np.cumsum(v)[:-1]])
    coef = 2.0 * dl * (0.5 * v + before)
    coef[-1] = dl * before[-1]
    return coef / (w * f)


def _prune_length(G: np.ndarray, dl: float, budget: float) -> int:
    """Grid size that drops a tail whose (l+1)-moment is below `budget`."""
    l = np.arange(G.size) * dl
    w = np.abs(G) * (l + 1.0) * dl
    tail = np.cumsum(w[::-1])[::-1]
    keep = int(np.searchsorted(-tail, -budget, side="left"))
    return max(keep + 1, 1)


def evolve_gap_density(
    tau_samples,
    num_colors: int,
    variant: str | None = None,
    grid: GridSpec | None = None,
    store_lmax: float | None = None,
    factor=None,
) -> GapDensityGrid:
    """Integrate the gap-density equation and sample it at `tau_samples`.

    The run starts from the low-density seed at tau0 = K * rho0, when each
    color holds about rho0 rods per sigma.  Samples earlier than tau0 use the
    same Poisson form at density tau/K.  `factor`, if given, overrides the
    admission factor as a function of tau (used for the K = 1 reduction).
    """
    grid = grid or GridSpec()
    variant = variant or default_variant(num_colors)
    taus = np.asarray(tau_samples, dtype=float)
    if taus.ndim != 1 or np.any(np.diff(taus) < 0) or np.any(taus < 0):
        raise ValueError("tau_samples must be ascending and non-negative")
    if factor is None:
        admission_factor(0.0, num_colors, variant)  # validates variant/K

        def factor(t):
            return admission_factor(2.0 * t, num_colors, variant)

    dl = grid.dl
    shift = grid.points_per_sigma
    lmax = grid.resolved_lmax()
    n0 = int(math.ceil(lmax / dl)) + 1
    l_full = np.arange(n0) * dl
    tau0 = num_colors * grid.rho0
    G = seed_gap_density(grid.rho0, l_full)

    n_store = n0 if store_lmax is None else min(n0, int(round(store_lmax / dl)) + 1)
    nt = taus.size
    out_G = np.zeros((nt, n_store))
    dens = np.zeros(nt)
    avail = np.zeros(nt)
    mom = np.zeros(nt)

    def record(j, g):
        m = min(g.size, n_store)
        out_G[j, :m] = g[:m]
        dens[j] = density_from_gaps(g, dl)
        avail[j] = available_fraction(g, dl)
        mom[j] = gap_moment(g, dl)

    j = 0
    while j < nt and taus[j] <= tau0:
        rho = taus[j] / num_colors
        if rho > 0:
            record(j, seed_gap_density(rho, l_full[:n_store]))
            dens[j] = rho / (1 + rho)
            avail[j] = 1.0 / (1 + rho)
            mom[j] = 1.0
        else:
            avail[j] = 1.0
            mom[j] = 1.0
        j += 1
    if j and taus[j - 1] == tau0:
        record(j - 1, G)

    rhs = _Rhs(G.size, shift, dl, factor)
    t_end = float(taus[-1]) if nt else tau0
    steps = 0
    prunes = 0
    if j < nt:
        solver = RK45(rhs, tau0, G, t_end, rtol=grid.rtol, atol=grid.atol)
        while j < nt:
            if solver.status == "finished" and solver.t < taus[j]:
                raise GapSolverError("solver stopped before the last sample time")
            if solver.status != "finished":
                msg = solver.step()
                steps += 1
                if solver.status == "failed":
                    raise GapSolverError(f"time stepping failed at tau={solver.t:.6g}: {msg}")
                if solver.step_size is not None and solver.step_size < 1e-14 * max(1.0, solver.t):
                    raise GapSolverError(
                        f"step size underflow at tau={solver.t:.6g}; the problem looks stiff")
            t_prev = solver.t_old
            if t_prev is None:
                continue
            if solver.t >= taus[j]:
                dense = solver.dense_output()
                while j < nt and taus[j] <= solver.t:
                    g = dense(taus[j])
                    _check_positive(g, taus[j])
                    record(j, g)
                    j += 1
            y = solver.y
            _check_positive(y, solver.t)
            if solver.status == "running":
                keep = _prune_length(y, dl, grid.prune_tol)
                if keep < 0.8 * y.size and keep > 2 * shift:
                    prunes += 1
                    h = solver.step_size
                    rhs.resize(keep)
                    solver = RK45(rhs, solver.t, y[:keep].copy(), t_end, rtol=grid.rtol,
                                  atol=grid.atol, first_step=min(h, t_end - solver.t))
    stats = {"steps": steps, "rhs_evals": rhs.evals, "prunes": prunes, "n_initial": n0,
             "n_final": rhs.n, "dl": dl, "lmax": lmax, "rho0": grid.rho0}
    return GapDensityGrid(np.arange(n_store) * dl, taus, out_G, dens, avail, mom,
                          num_colors, variant, tau0=tau0, stats=stats)


def _check_positive(g: np.ndarray, t: float) -> None:
    low = g.min()
    if low < -1e-10:
        raise GapSolverError(f"gap density went negative ({low:.3g}) at tau={t:.6g}; "
                             "scheme unstable, tighten rtol")


def solve_gap_density(params: Params1D, sample_times, variant: str | None = None,
                      grid: GridSpec | None = None, store_lmax: float | None = 20.0,
                      ) -> GapDensityGrid:
    """Physical-units wrapper: sample times in t, output rescaled by sigma."""
    taus = params.to_tau(np.asarray(sample_times, dtype=float))
    out = evolve_gap_density(taus, params.num_colors, variant, grid,
                             None if store_lmax is None else store_lmax)
    out.sigma, out.rate = params.sigma, params.rate
    return out.physical()
