"""Data series behind figures 4 to 9, in long (tidy) table form."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import Params1D, Params2D
from .gapdensity import default_variant, evolve_gap_density
from .iterative import density_iterative
from .kinetics2d import multilayer_2d
from .report import Artifact
from .sim1d import empirical_gap_density, replicate_1d, run_sim_1d
from .sim2d import replicate_2d
from .wifi import PRESETS, plan_curve, solve_tau

log = logging.getLogger(__name__)

SUPPORTED_FIGURES = (4, 5, 6, 7, 8, 9)
PROFILE_TIMES = (2.0, 6.0, 10.0)


class UnknownFigureError(KeyError):
    def __str__(self):
        return self.args[0]


def _opt(overrides: dict, key: str, default):
    value = (overrides or {}).get(key) or 0
    return value if value else default


def figure4(overrides=None, jobs: int = 1) -> Artifact:
    """Gap-density profiles G(l) at K = 2 for three times, solver and simulation."""
    reps = _opt(overrides, "replications", 20)
    length = _opt(overrides, "size", 1e4)
    seed = (overrides or {}).get("seed", 0)
    sol = evolve_gap_density(np.array(PROFILE_TIMES), 2, store_lmax=5.0)
    step = 5
    rows = []
    for j, t in enumerate(PROFILE_TIMES):
        for l, g in zip(sol.l_grid[::step], sol.G[j, ::step]):
            rows.append((t, "gap", float(l), float(g)))
    edges = np.linspace(0.0, 5.0, 101)
    results = {}
    for j, t in enumerate(PROFILE_TIMES):
        params = Params1D.from_tau_horizon(t, num_colors=2, domain_length=length, seed=seed)

        def one(i):
            _, state = run_sim_1d(params, [params.horizon], stream=i)
            return np.mean([empirical_gap_density(state, c, edges).density for c in range(2)], axis=0)

        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            hist = np.mean(list(pool.map(one, range(reps))), axis=0)
        mids = 0.5 * (edges[1:] + edges[:-1])
        rows += [(t, "sim", float(l), float(g)) for l, g in zip(mids, hist)]
        results[f"gap_mass_below_sigma.tau{t:g}"] = float(sol.mass_below(1.0)[j])
    return Artifact(["tau", "source", "l", "G"], rows, results,
                    plot=dict(x="l", y="G", group=["tau", "source"], markers="sim"))


def _sim_curve_1d(k, tau, reps, length, seed, jobs):
    params = Params1D.from_tau_horizon(float(tau[-1]), num_colors=k, domain_length=length, seed=seed)
    curve = replicate_1d(params, params.from_tau(tau), reps, jobs)
    return curve.mean_over_colors(), curve.stderr_over_colors()


def _density_figure(ks, methods, overrides, jobs) -> Artifact:
    reps = _opt(overrides, "replications", 20)
    length = _opt(overrides, "size", 1e4)
    seed = (overrides or {}).get("seed", 0)
    tau = np.linspace(0.25, 10.0, 40)
    rows = []
    for k in ks:
        log.info("figure data: K=%d", k)
        sim, err = _sim_curve_1d(k, tau, reps, length, seed, jobs)
        rows += [(k, "sim", float(t), float(m), float(e)) for t, m, e in zip(tau, sim, err)]
        for m in methods:
            if m == "iter":
                vals = density_iterative(tau, k)
                name = "iter"
            else:
                variant = m if m != "gap" else default_variant(k)
                vals = evolve_gap_density(tau, k, variant).density
                name = f"gap:{variant}"
            rows += [(k, name, float(t), float(v), 0.0) for t, v in zip(tau, vals)]
    return Artifact(["k", "source", "tau", "value", "stderr"], rows,
                    plot=dict(x="tau", y="value", err="stderr", group=["k", "source"], markers="sim"))


def figure5(overrides=None, jobs: int = 1) -> Artifact:
    """K = 2 density per color: gap method (both factors) against simulation."""
    return _density_figure([2], ["exact-K2", "generic-K"], overrides, jobs)


def figure6(overrides=None, jobs: int = 1) -> Artifact:
    """Iterative method for K = 2, 3, 4 against simulation."""
    return _density_figure([2, 3, 4], ["iter"], overrides, jobs)


def figure7(overrides=None, jobs: int = 1) -> Artifact:
    """Generic-K gap method for K = 2, 3, 4 against simulation."""
    return _density_figure([2, 3, 4], ["generic-K"], overrides, jobs)


def figure8(overrides=None, jobs: int = 1) -> Artifact:
    """Per-color 2D coverage for K = 1..4, recursion against simulation."""
    reps = _opt(overrides, "replications", 10)
    side = _opt(overrides, "size", 100.0)
    seed = (overrides or {}).get("seed", 0)
    rows = []
    for k in (1, 2, 3, 4):
        tau = np.linspace(0.5, 20.0, 40) * k
        params = Params2D.from_tau_horizon(float(tau[-1]), num_colors=k, domain_side=side, seed=seed)
        log.info("figure data: 2D K=%d", k)
        curve = replicate_2d(params, params.from_tau(tau), reps, jobs)
        sim, err = curve.mean_over_colors(), curve.stderr_over_colors()
        theory = [multilayer_2d(float(t), k).per_color for t in tau]
        rows += [(k, "sim", float(t), float(t / k), float(m), float(e))
                 for t, m, e in zip(tau, sim, err)]
        rows += [(k, "theory", float(t), float(t / k), float(v), 0.0) for t, v in zip(tau, theory)]
    return Artifact(["k", "source", "tau", "tau_per_color", "theta", "stderr"], rows,
                    plot=dict(x="tau_per_color", y="theta", err="stderr", group=["k", "source"], markers="sim"))


def figure9(overrides=None, jobs: int = 1) -> Artifact:
    """Inhibition distance against AP density for the 2.4 and 5 GHz channel counts."""
    lam = np.geomspace(1e-4, 1e-2, 41)
    rows, results = [], {}
    for k in PRESETS.values():
        rows += [(k, float(a), float(d)) for a, d in plan_curve(lam, k)]
        tau = solve_tau(k)
        results[f"tau_load.k{k}"] = tau
        # scale-invariant form: d_inh^2 * lambda_t depends on K and the target only
        results[f"d2_lambda.k{k}"] = 4.0 * tau / math.pi
    return Artifact(["k", "lambda_t", "d_inh"], rows, results,
                    plot=dict(x="lambda_t", y="d_inh", group=["k"], logx=True, logy=True))


FIGURES = {4: figure4, 5: figure5, 6: figure6, 7: figure7, 8: figure8, 9: figure9}


def emit_figure_data(figure_id: int, overrides: dict | None = None, jobs: int = 1) -> Artifact:
    try:
        builder = FIGURES[int(figure_id)]
    except (KeyError, TypeError, ValueError):
        raise UnknownFigureError(
            f"unknown figure id {figure_id!r}; supported ids: "
            f"{', '.join(map(str, SUPPORTED_FIGURES))}") from None
    return builder(overrides, jobs)
