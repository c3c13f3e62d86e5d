"""Event-driven Monte Carlo of multilayer RSA on a periodic line.

Rods of length sigma land at Poisson space-time points.  An arriving rod gets
a color drawn uniformly from the colors that no admitted rod within distance
sigma already uses; if every color is taken it is rejected.  The whole
space-time sample is drawn up front and processed in time order, so there is
no time discretisation.

Per-color spatial index: the line is cut into ``ncell = ceil(L)`` cells of
width ``w <= 1`` (sigma = 1 internally), so a cell holds at most one rod of a
given color and a distance-sigma query touches ``2*ceil(1/w)+1`` cells.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (ArrivalBudgetError, Counters, DensityCurve, MAX_ARRIVALS, Params1D,
                   seeded_rng, slab_bounds, stack_replications)

RANDOM = 0
SEQUENTIAL = 1
_ASSIGNMENT = {"random": RANDOM, "sequential": SEQUENTIAL}


@njit(cache=True, nogil=True, inline="always")
def _torus_dist(a, b, length):
    d = abs(a - b)
    return min(d, length - d)


@njit(cache=True, nogil=True)
def _available_mask(cells, x, width, reach, length, out):
    """Fill `out[c]` with True where color c is free at position x."""
    ncolor, ncell = cells.shape
    home = int(x / width)
    if home >= ncell:
        home = ncell - 1
    for c in range(ncolor):
        free = True
        for off in range(-reach, reach + 1):
            j = (home + off) % ncell
            y = cells[c, j]
            if y == y and _torus_dist(x, y, length) < 1.0:
                free = False
                break
        out[c] = free


@njit(cache=True, nogil=True)
def _deposit_slab(pos, tau, u, cells, width, reach, length, rule,
                  counts, sample_at, sample_rows, out,
                  rod_pos, rod_col, rod_tau, counters):
    """Process one time-sorted slab of arrivals.

    ``counters`` = [attempted, admitted, rejected]; ``sample_at[j]`` is the
    arrival index before which the counts for output row ``sample_rows[j]``
    are recorded (``len(pos)`` for samples after the slab's last arrival).
    """
    ncolor = cells.shape[0]
    free = np.empty(ncolor, dtype=np.bool_)
    avail = np.empty(ncolor, dtype=np.int64)
    js = 0
    nsamp = sample_at.shape[0]
    for i in range(pos.shape[0]):
        while js < nsamp and sample_at[js] == i:
            for c in range(ncolor):
                out[sample_rows[js], c] = counts[c]
            js += 1
        x = pos[i]
        _available_mask(cells, x, width, reach, length, free)
        navail = 0
        for c in range(ncolor):
            if free[c]:
                avail[navail] = c
                navail += 1
        counters[0] += 1
        if navail == 0:
            counters[2] += 1
            continue
        if rule == 1:
            c = avail[0]
        else:
            k = int(u[i] * navail)
            if k >= navail:
                k = navail - 1
            c = avail[k]
        home = int(x / width)
        if home >= cells.shape[1]:
            home = cells.shape[1] - 1
        cells[c, home] = x
        n = counters[1]
        rod_pos[n] = x
        rod_col[n] = c
        rod_tau[n] = tau[i]
        counters[1] += 1
        counts[c] += 1
    while js < nsamp:
        for c in range(ncolor):
            out[sample_rows[js], c] = counts[c]
        js += 1


@dataclass
class Rod:
    center: float
    color: int
    arrival_time: float


class DepositionState1D:
    """Admitted rods of every color plus arrival counters.

    Positions are kept in units of sigma; the accessors return physical units.
    """

    def __init__(self, params: Params1D):
        self.params = params
        self.length = params.length
        self.ncell = int(math.ceil(self.length))
        self.width = self.length / self.ncell
        self.reach = int(math.ceil(1.0 / self.width))
        k = params.num_colors
        self.cells = np.full((k, self.ncell), np.nan)
        capacity = k * self.ncell + 1
        self.rod_pos = np.empty(capacity)
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

    @property
    def time(self) -> float:
        return float(self.params.from_tau(self.tau))

    def num_rods(self, color: int | None = None) -> int:
        if color is None:
            return int(self._counters[1])
        return int(self.counts[int(color)])

    def positions(self, color: int) -> np.ndarray:
        """Sorted rod centers of one color (physical units)."""
        n = int(self._counters[1])
        sel = self.rod_pos[:n][self.rod_col[:n] == int(color)]
        return np.sort(sel) * self.params.sigma

    def rods(self) -> list[Rod]:
        n = int(self._counters[1])
        sigma = self.params.sigma
        times = self.params.from_tau(self.rod_tau[:n])
        return [Rod(float(self.rod_pos[i] * sigma), int(self.rod_col[i]), float(times[i]))
                for i in range(n)]

    def density(self) -> np.ndarray:
        """Rods of each color per unit length (physical units)."""
        return self.counts / self.params.domain_length


def _scaled_position(state: DepositionState1D, x: float) -> float:
    xs = x / state.params.sigma
    if not 0.0 <= xs < state.length:
        raise ValueError(f"position {x} outside [0, {state.params.domain_length})")
    return xs


def available_colors(state: DepositionState1D, x: float) -> set[int]:
    """Colors with no admitted rod closer than sigma to `x`."""
    free = np.empty(state.num_colors, dtype=np.bool_)
    _available_mask(state.cells, _scaled_position(state, x), state.width, state.reach,
                    state.length, free)
    return {int(c) for c in np.flatnonzero(free)}


def deposit(state: DepositionState1D, arrival: tuple[float, float],
            rng: np.random.Generator, assignment: str = "random") -> int | None:
    """Offer one arrival ``(position, time)`` to the system.

    Returns the admitted color index, or None if every color is blocked.
    """
    x, t = arrival
    tau = float(state.params.to_tau(t))
    if tau < state.tau:
        raise ValueError(f"arrival at t={t} precedes the current time {state.time}")
    xs = _scaled_position(state, x)
    out = np.zeros((1, state.num_colors), dtype=np.int64)
    before = int(state._counters[1])
    _deposit_slab(np.array([xs]), np.array([tau]), np.array([rng.random()]), state.cells,
                  state.width, state.reach, state.length, _ASSIGNMENT[assignment],
                  state.counts, np.zeros(0, np.int64), np.zeros(0, np.int64), out,
                  state.rod_pos, state.rod_col, state.rod_tau, state._counters)
    state.tau = tau
    if int(state._counters[1]) == before:
        return None
    return int(state.rod_col[before])


def _slab_arrivals(rng, length, lo, hi):
    n = rng.poisson(length * (hi - lo))
    tau = rng.uniform(lo, hi, size=n)
    pos = rng.uniform(0.0, length, size=n)
    u = rng.random(size=n)
    order = np.argsort(tau, kind="stable")
    return pos[order], tau[order], u[order]


def _iter_slabs(params: Params1D, rng: np.random.Generator):
    """Yield time-sorted ``(pos, tau, u, lo, hi)`` slabs covering [0, tau_max].

    Splitting a Poisson space-time sample into time slabs with independent
    Poisson counts leaves its law unchanged and bounds peak memory.
    """
    bounds = slab_bounds(params.length * params.tau_max, params.tau_max)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        pos, tau, u = _slab_arrivals(rng, params.length, lo, hi)
        yield pos, tau, u, lo, hi


def generate_arrivals(params: Params1D, stream: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Poisson arrivals ``(positions, times)`` sorted by time, physical units.

    This is exactly the sample a run with the same ``(params.seed, stream)``
    consumes.
    """
    expected = params.length * params.tau_max
    if expected > MAX_ARRIVALS:
        raise ArrivalBudgetError(
            f"expected {expected:.3g} arrivals exceeds {MAX_ARRIVALS:.0e}; "
            "reduce domain_length or horizon")
    rng = seeded_rng(params.seed, stream)
    parts_x, parts_t = [], []
    for pos, tau, _u, _lo, _hi in _iter_slabs(params, rng):
        parts_x.append(pos)
        parts_t.append(tau)
    if not parts_x:
        return np.zeros(0), np.zeros(0)
    x = np.concatenate(parts_x) * params.sigma
    t = params.from_tau(np.concatenate(parts_t))
    return x, t


def _run_tau(params: Params1D, sample_tau: np.ndarray, stream: int, assignment: str):
    state = DepositionState1D(params)
    rule = _ASSIGNMENT[assignment]
    out = np.zeros((sample_tau.size, params.num_colors), dtype=np.int64)
    rng = seeded_rng(params.seed, stream)
    done = 0
    for pos, tau, u, lo, hi in _iter_slabs(params, rng):
        last = hi >= params.tau_max
        stop = np.searchsorted(sample_tau, hi, side="right" if last else "left")
        rows = np.arange(done, stop, dtype=np.int64)
        at = np.searchsorted(tau, sample_tau[done:stop], side="right").astype(np.int64)
        _deposit_slab(pos, tau, u, state.cells, state.width, state.reach, state.length, rule,
                      state.counts, at, rows, out, state.rod_pos, state.rod_col, state.rod_tau,
                      state._counters)
        done = stop
        state.tau = hi
    if done < sample_tau.size:
        out[done:] = state.counts
    state.tau = params.tau_max
    return out / params.domain_length, state


def _check_samples(params, sample_times) -> np.ndarray:
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1:
        raise ValueError("sample_times must be one-dimensional")
    if np.any(np.diff(times) < 0):
        raise ValueError("sample_times must be ascending")
    if times.size and (times[0] < 0 or times[-1] > params.horizon * (1 + 1e-12)):
        raise ValueError(f"sample_times must lie within [0, {params.horizon}]")
    return times


def run_sim_1d(params: Params1D, sample_times, stream: int = 0,
               assignment: str = "random") -> tuple[DensityCurve, DepositionState1D]:
    """Single replication: per-color density at each sample time."""
    times = _check_samples(params, sample_times)
    dens, state = _run_tau(params, params.to_tau(times), stream, assignment)
    return DensityCurve(times, dens, tau=params.to_tau(times)), state


def replicate_1d(params: Params1D, sample_times, replications: int = 20, jobs: int = 1,
                 assignment: str = "random") -> DensityCurve:
    """Mean and standard error of per-color density over independent streams.

    Replication ``i`` always uses stream ``i``; results are reduced in stream
    order, so the output does not depend on `jobs`.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    times = _check_samples(params, sample_times)
    tau = params.to_tau(times)

    def one(i):
        return _run_tau(params, tau, i, assignment)[0]

    if jobs > 1 and replications > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(one, range(replications)))
    else:
        runs = [one(i) for i in range(replications)]
    mean, err = stack_replications(runs)
    return DensityCurve(times, mean, err, tau=tau, replications=replications)


@dataclass(frozen=True)
class GapHistogram:
    """Empirical gap density of one color (gaps per unit length per unit gap length)."""

    color: int
    bin_edges: np.ndarray
    density: np.ndarray
    domain_length: float

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def rod_density(self) -> float:
        return float(np.sum(self.density * self.widths))


def gap_lengths(state: DepositionState1D, color: int) -> np.ndarray:
    """Circular gaps (center spacing minus sigma) between rods of one color."""
    x = state.positions(color)
    if x.size < 2:
        raise ValueError(f"color {color} has {x.size} rods; need at least 2 for gaps")
    spacing = np.diff(np.append(x, x[0] + state.params.domain_length))
    return spacing - state.params.sigma


def empirical_gap_density(state: DepositionState1D, color: int, bin_edges) -> GapHistogram:
    gaps = gap_lengths(state, color)
    edges = np.asarray(bin_edges, dtype=float)
    counts, _ = np.histogram(gaps, bins=edges)
    dens = counts / (state.params.domain_length * np.diff(edges))
    return GapHistogram(int(color), edges, dens, state.params.domain_length)


def min_same_color_spacing(state: DepositionState1D) -> float:
    """Smallest circular spacing between same-color rods, over all colors."""
    best = math.inf
    for c in range(state.num_colors):
        x = state.positions(c)
        if x.size >= 2:
            spacing = np.diff(np.append(x, x[0] + state.params.domain_length))
            best = min(best, float(spacing.min()))
    return best
