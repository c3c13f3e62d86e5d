"""Monte Carlo of multilayer RSA with hard circles on a periodic square.

Same rules as in 1D: an arrival takes a uniformly random color among those
with no admitted circle center closer than sigma, or is dropped.  Each color
has its own cell grid with cells of side in [sigma, 1.1 sigma), so conflicts
sit in the 3x3 block around the arrival's cell.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import Counters, DensityCurve, Params2D, seeded_rng, slab_bounds, stack_replications

CELL_CAPACITY = 8
KAPPA = math.pi / 4


@njit(cache=True, nogil=True, inline="always")
def _wrap(d, side):
    d = abs(d)
    return min(d, side - d)


@njit(cache=True, nogil=True)
def _free_colors(cells, fill, x, y, width, side, out):
    ncolor, n = fill.shape[0], fill.shape[1]
    cx = min(int(x / width), n - 1)
    cy = min(int(y / width), n - 1)
    for c in range(ncolor):
        free = True
        for dx in range(-1, 2):
            if not free:
                break
            ix = (cx + dx) % n
            for dy in range(-1, 2):
                iy = (cy + dy) % n
                for s in range(fill[c, ix, iy]):
                    ex = _wrap(x - cells[c, ix, iy, s, 0], side)
                    ey = _wrap(y - cells[c, ix, iy, s, 1], side)
                    if ex * ex + ey * ey < 1.0:
                        free = False
                        break
                if not free:
                    break
        out[c] = free


@njit(cache=True, nogil=True)
def _deposit_slab_2d(px, py, tau, u, cells, fill, width, side, counts,
                     sample_at, sample_rows, out, rods, rod_col, rod_tau, counters):
    """Returns -1 on success, or the index of an arrival that overflowed a cell."""
    ncolor = fill.shape[0]
    n = fill.shape[1]
    cap = cells.shape[3]
    free = np.empty(ncolor, dtype=np.bool_)
    avail = np.empty(ncolor, dtype=np.int64)
    js = 0
    nsamp = sample_at.shape[0]
    for i in range(px.shape[0]):
        while js < nsamp and sample_at[js] == i:
            for c in range(ncolor):
                out[sample_rows[js], c] = counts[c]
            js += 1
        x = px[i]
        y = py[i]
        _free_colors(cells, fill, x, y, width, side, free)
        navail = 0
        for c in range(ncolor):
            if free[c]:
                avail[navail] = c
                navail += 1
        counters[0] += 1
        if navail == 0:
            counters[2] += 1
            continue
        k = min(int(u[i] * navail), navail - 1)
        c = avail[k]
        cx = min(int(x / width), n - 1)
        cy = min(int(y / width), n - 1)
        slot = fill[c, cx, cy]
        if slot >= cap:
            return i
        cells[c, cx, cy, slot, 0] = x
        cells[c, cx, cy, slot, 1] = y
        fill[c, cx, cy] = slot + 1
        m = counters[1]
        rods[m, 0] = x
        rods[m, 1] = y
        rod_col[m] = c
        rod_tau[m] = tau[i]
        counters[1] += 1
        counts[c] += 1
    while js < nsamp:
        for c in range(ncolor):
            out[sample_rows[js], c] = counts[c]
        js += 1
    return -1


@dataclass
class Circle:
    center: tuple[float, float]
    color: int
    arrival_time: float


class DepositionState2D:
    """Admitted circles, per-color cell index and counters (sigma = 1 inside)."""

    def __init__(self, params: Params2D):
        self.params = params
        self.side = params.side
        self.ncell = int(math.floor(self.side))
        self.width = self.side / self.ncell
        k = params.num_colors
        self.cells = np.zeros((k, self.ncell, self.ncell, CELL_CAPACITY, 2))
        self.fill = np.zeros((k, self.ncell, self.ncell), dtype=np.int64)
        # densest packing of unit disks: < 1.16 centers per unit area
        capacity = int(k * 1.16 * (self.side + 2) ** 2) + 8
        self.rods = np.empty((capacity, 2))
        self.rod_col = np.empty(capacity, dtype=np.int64)
        self.rod_tau = np.empty(capacity)
        self.counts = np.zeros(k, dtype=np.int64)
        self._counters = np.zeros(3, dtype=np.int64)
        self.tau = 0.0

    @property
    def num_colors(self) -> int:
        return self.params.num_colors

    @property
    def counters(self) -> Counters:
        a, b, c = (int(v) for v in self._counters)
        return Counters(attempted=a, admitted=b, rejected=c)

    def centers(self, color: int | None = None) -> np.ndarray:
        """Circle centers (physical units), optionally of one color."""
        n = int(self._counters[1])
        pts = self.rods[:n]
        if color is not None:
            pts = pts[self.rod_col[:n] == int(color)]
        return pts * self.params.sigma

    def colors(self) -> np.ndarray:
        return self.rod_col[: int(self._counters[1])].copy()

    def circles(self) -> list[Circle]:
        n = int(self._counters[1])
        s = self.params.sigma
        t = self.params.from_tau(self.rod_tau[:n])
        return [Circle((float(self.rods[i, 0] * s), float(self.rods[i, 1] * s)),
                       int(self.rod_col[i]), float(t[i])) for i in range(n)]

    def coverage(self) -> np.ndarray:
        """Area fraction covered by each color, kappa * rho."""
        return self.counts * KAPPA / self.side**2

    def _run(self, px, py, tau, u, sample_at, rows, out):
        bad = _deposit_slab_2d(px, py, tau, u, self.cells, self.fill, self.width, self.side,
                               self.counts, sample_at, rows, out, self.rods, self.rod_col,
                               self.rod_tau, self._counters)
        if bad >= 0:
            raise RuntimeError(f"cell capacity {CELL_CAPACITY} exceeded; hard-core index corrupt")


def _scaled_point(state: DepositionState2D, p) -> tuple[float, float]:
    x, y = (float(v) / state.params.sigma for v in p)
    if not (0.0 <= x < state.side and 0.0 <= y < state.side):
        raise ValueError(f"point {p} outside [0, {state.params.domain_side})^2")
    return x, y


def available_colors_2d(state: DepositionState2D, p) -> set[int]:
    """Colors with no circle center within sigma of point `p` (3x3 cell scan)."""
    x, y = _scaled_point(state, p)
    free = np.empty(state.num_colors, dtype=np.bool_)
    _free_colors(state.cells, state.fill, x, y, state.width, state.side, free)
    return {int(c) for c in np.flatnonzero(free)}


def available_colors_bruteforce(state: DepositionState2D, p) -> set[int]:
    """Reference all-pairs version of :func:`available_colors_2d`."""
    x, y = _scaled_point(state, p)
    n = int(state._counters[1])
    d = np.abs(state.rods[:n] - np.array([x, y]))
    d = np.minimum(d, state.side - d)
    close = (d**2).sum(axis=1) < 1.0
    blocked = set(int(c) for c in state.rod_col[:n][close])
    return set(range(state.num_colors)) - blocked


def deposit_2d(state: DepositionState2D, arrival, rng: np.random.Generator) -> int | None:
    """Offer one arrival ``((x, y), t)``; returns the admitted color or None."""
    p, t = arrival
    tau = float(state.params.to_tau(t))
    if tau < state.tau:
        raise ValueError(f"arrival at t={t} precedes the current state time")
    x, y = _scaled_point(state, p)
    before = int(state._counters[1])
    out = np.zeros((1, state.num_colors), dtype=np.int64)
    empty = np.zeros(0, np.int64)
    state._run(np.array([x]), np.array([y]), np.array([tau]), np.array([rng.random()]),
               empty, empty, out)
    state.tau = tau
    if int(state._counters[1]) == before:
        return None
    return int(state.rod_col[before])


def _iter_slabs_2d(params: Params2D, rng):
    area = params.side**2
    # arrivals per unit area per unit tau is 1/kappa with sigma = 1
    per_tau = area / KAPPA
    bounds = slab_bounds(per_tau * params.tau_max, params.tau_max)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        n = rng.poisson(per_tau * (hi - lo))
        tau = rng.uniform(lo, hi, size=n)
        px = rng.uniform(0.0, params.side, size=n)
        py = rng.uniform(0.0, params.side, size=n)
        u = rng.random(size=n)
        order = np.argsort(tau, kind="stable")
        yield px[order], py[order], tau[order], u[order], lo, hi


def _run_tau_2d(params: Params2D, sample_tau: np.ndarray, stream: int):
    state = DepositionState2D(params)
    out = np.zeros((sample_tau.size, params.num_colors), dtype=np.int64)
    rng = seeded_rng(params.seed, stream)
    done = 0
    for px, py, tau, u, lo, hi in _iter_slabs_2d(params, rng):
        last = hi >= params.tau_max
        stop = np.searchsorted(sample_tau, hi, side="right" if last else "left")
        rows = np.arange(done, stop, dtype=np.int64)
        at = np.searchsorted(tau, sample_tau[done:stop], side="right").astype(np.int64)
        state._run(px, py, tau, u, at, rows, out)
        done = stop
        state.tau = hi
    if done < sample_tau.size:
        out[done:] = state.counts
    state.tau = params.tau_max
    return out * KAPPA / params.side**2, state


def _check_samples(params: Params2D, sample_times) -> np.ndarray:
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0):
        raise ValueError("sample_times must be a 1-d ascending sequence")
    if times.size and (times[0] < 0 or times[-1] > params.horizon * (1 + 1e-12)):
        raise ValueError(f"sample_times must lie within [0, {params.horizon}]")
    return times


def run_sim_2d(params: Params2D, sample_times, stream: int = 0
               ) -> tuple[DensityCurve, DepositionState2D]:
    """One replication: per-color coverage theta_k = kappa*rho_k at each sample time."""
    times = _check_samples(params, sample_times)
    tau = params.to_tau(times)
    cov, state = _run_tau_2d(params, tau, stream)
    return DensityCurve(times, cov, tau=tau), state


def replicate_2d(params: Params2D, sample_times, replications: int = 10,
                 jobs: int = 1) -> DensityCurve:
    """Mean coverage and standard error over streams 0..replications-1."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    times = _check_samples(params, sample_times)
    tau = params.to_tau(times)

    def one(i):
        return _run_tau_2d(params, tau, i)[0]

    if jobs > 1 and replications > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(one, range(replications)))
    else:
        runs = [one(i) for i in range(replications)]
    mean, err = stack_replications(runs)
    return DensityCurve(times, mean, err, tau=tau, replications=replications)


def min_same_color_distance(state: DepositionState2D) -> float:
    """Exhaustive pair scan (torus metric) over same-color centers, physical units."""
    best = math.inf
    side = state.params.domain_side
    for c in range(state.num_colors):
        pts = state.centers(c)
        for i in range(len(pts) - 1):
            d = np.abs(pts[i + 1:] - pts[i])
            d = np.minimum(d, side - d)
            if d.size:
                best = min(best, float(np.sqrt((d**2).sum(axis=1)).min()))
    return best
