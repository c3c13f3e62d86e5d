"""Mode runners: validated config in, :class:`Artifact` out."""

from __future__ import annotations

import logging

import numpy as np

from .config import ExperimentConfig
from .core import Params1D, Params2D
from .gapdensity import GridSpec, default_variant, evolve_gap_density, solve_gap_density
from .iterative import density_iterative
from .kinetics2d import CUBED, JAMMING_COVERAGE, RetentionModel, monolayer_table, multilayer_2d
from .report import Artifact
from .sim1d import replicate_1d
from .sim2d import replicate_2d
from .wifi import PRESETS, plan_curve, solve_tau

log = logging.getLogger(__name__)

CURVE_COLUMNS = ["tau", "color", "value", "stderr"]
CURVE_PLOT = dict(x="tau", y="value", err="stderr", group=["color"])


def _curve_rows(tau, values, stderr) -> list[tuple]:
    rows = []
    for i, t in enumerate(tau):
        for c in range(values.shape[1]):
            rows.append((float(t), c, float(values[i, c]), float(stderr[i, c])))
    return rows


def _variant(p) -> str:
    return default_variant(p["k"]) if p["variant"] == "auto" else p["variant"]


def run_sim1d(p: dict, jobs: int = 1) -> Artifact:
    params = Params1D.from_tau_horizon(p["tau_max"], sigma=p["sigma"], rate=p["rate"],
                                       num_colors=p["k"], domain_length=p["length"] * p["sigma"],
                                       seed=p["seed"])
    times = np.linspace(0.0, params.horizon, p["samples"])
    log.info("sim1d: K=%d, L=%g, %d replications", p["k"], p["length"], p["replications"])
    curve = replicate_1d(params, times, p["replications"], jobs, p["assignment"])
    final = curve.values[-1]
    return Artifact(CURVE_COLUMNS, _curve_rows(curve.tau, curve.values, curve.stderr),
                    {"final_mean_density": float(final.mean())}, plot=CURVE_PLOT)


def run_sim2d(p: dict, jobs: int = 1) -> Artifact:
    params = Params2D.from_tau_horizon(p["tau_max"], sigma=p["sigma"], rate=p["rate"],
                                       num_colors=p["k"], domain_side=p["side"] * p["sigma"],
                                       seed=p["seed"])
    times = np.linspace(0.0, params.horizon, p["samples"])
    log.info("sim2d: K=%d, side=%g, %d replications", p["k"], p["side"], p["replications"])
    curve = replicate_2d(params, times, p["replications"], jobs)
    return Artifact(CURVE_COLUMNS, _curve_rows(curve.tau, curve.values, curve.stderr),
                    {"final_mean_coverage": float(curve.values[-1].mean())}, plot=CURVE_PLOT)


def run_solve1d_iter(p: dict, jobs: int = 1) -> Artifact:
    tau = np.linspace(0.0, p["tau_max"], p["samples"])
    rho = density_iterative(tau, p["k"]) / p["sigma"]
    values = np.repeat(rho[:, None], p["k"], axis=1)
    return Artifact(CURVE_COLUMNS, _curve_rows(tau, values, np.zeros_like(values)),
                    {"final_density": float(rho[-1])}, plot=CURVE_PLOT)


def run_solve1d_gap(p: dict, jobs: int = 1) -> Artifact:
    params = Params1D.from_tau_horizon(p["tau_max"], sigma=p["sigma"], rate=p["rate"],
                                       num_colors=p["k"])
    times = np.linspace(0.0, params.horizon, p["samples"])
    grid = GridSpec(points_per_sigma=p["points_per_sigma"], rho0=p["rho0"])
    sol = solve_gap_density(params, times, _variant(p), grid, store_lmax=p["store_lmax"] * p["sigma"])
    rows = [(float(l), float(t), float(g))
            for j, t in enumerate(sol.t_grid) for l, g in zip(sol.l_grid, sol.G[j])]
    values = np.repeat(sol.density[:, None], p["k"], axis=1)
    density = Artifact(CURVE_COLUMNS, _curve_rows(params.to_tau(sol.t_grid), values,
                                                  np.zeros_like(values)), plot=CURVE_PLOT)
    results = {"variant": sol.variant, "final_density": float(sol.density[-1]),
               "moment_drift": float(sol.moment[-1] - 1.0)}
    return Artifact(["l", "t", "G"], rows, results, companions={"density": density},
                    plot=dict(x="l", y="G", group=["t"]))


def _model(p) -> RetentionModel:
    return RetentionModel(bracket=p.get("bracket", CUBED))


def run_solve2d(p: dict, jobs: int = 1) -> Artifact:
    model = _model(p)
    c = p["kinetic_constant"]
    tau = np.linspace(0.0, p["tau_max"], p["samples"])
    table = monolayer_table(model, c)
    per_layer = np.array([multilayer_2d(float(t), p["k"], model, c).per_layer for t in tau])
    per_color = per_layer.mean(axis=1)
    values = np.repeat(per_color[:, None], p["k"], axis=1)
    results = {"final_coverage": float(per_color[-1]),
               "monolayer_at_tau_max": float(table(p["tau_max"]))}
    return Artifact(CURVE_COLUMNS, _curve_rows(tau, values, np.zeros_like(values)), results,
                    plot=CURVE_PLOT)


def run_plan_wifi(p: dict, jobs: int = 1) -> Artifact:
    k = PRESETS[p["preset"]] if p["preset"] else p["k"]
    lam = np.geomspace(p["lambda_min"], p["lambda_max"], p["points"])
    plan = plan_curve(lam, k, p["fraction"])
    tau = solve_tau(k, p["fraction"])
    results = {"channels": k, "tau_load": tau, "d2_lambda": 4.0 * tau / np.pi,
               "target_coverage": p["fraction"] * JAMMING_COVERAGE}
    return Artifact(["lambda_t", "d_inh"], [tuple(map(float, r)) for r in plan], results,
                    plot=dict(x="lambda_t", y="d_inh", logx=True, logy=True))


def relative_errors(sim_mean, sim_stderr, theory) -> np.ndarray:
    """|theory - sim| / sim where sim exceeds ten standard errors, NaN elsewhere."""
    sim_mean = np.asarray(sim_mean, float)
    ok = sim_mean > 10.0 * np.asarray(sim_stderr, float)
    out = np.full(sim_mean.shape, np.nan)
    out[ok] = np.abs(np.asarray(theory, float)[ok] - sim_mean[ok]) / sim_mean[ok]
    return out


def run_compare(p: dict, jobs: int = 1) -> Artifact:
    methods = [m for m in p["methods"].split(",") if m]
    tau = np.linspace(p["tau_min"], p["tau_max"], p["samples"])
    k = p["k"]
    if p["dim"] == 1:
        size = p["size"] or 1e4
        params = Params1D.from_tau_horizon(p["tau_max"], num_colors=k, domain_length=size,
                                           seed=p["seed"])
        curve = replicate_1d(params, params.from_tau(tau), p["replications"], jobs)
    else:
        size = p["size"] or 100.0
        params = Params2D.from_tau_horizon(p["tau_max"], num_colors=k, domain_side=size,
                                           seed=p["seed"])
        curve = replicate_2d(params, params.from_tau(tau), p["replications"], jobs)
    sim, err = curve.mean_over_colors(), curve.stderr_over_colors()

    theory = {}
    for m in methods:
        if m == "iter":
            theory[m] = density_iterative(tau, k) if p["dim"] == 1 else np.array(
                [multilayer_2d(float(t), k).per_color for t in tau])
        else:
            theory[m] = evolve_gap_density(tau, k, _variant(p)).density
    rel = {m: relative_errors(sim, err, v) for m, v in theory.items()}

    columns = ["tau", "sim_mean", "sim_stderr"] + methods + [f"{m}_relerr" for m in methods]
    rows = [tuple([float(tau[i]), float(sim[i]), float(err[i])]
                  + [float(theory[m][i]) for m in methods]
                  + [float(rel[m][i]) for m in methods]) for i in range(tau.size)]
    results, passed = {}, True
    for m in methods:
        worst = float(np.nanmax(rel[m])) if np.any(np.isfinite(rel[m])) else float("nan")
        tol = p[f"tol_{m}"]
        ok = bool(worst <= tol)
        passed &= ok
        results[f"max_relerr.{m}"] = worst
        results[f"tolerance.{m}"] = tol
        results[f"gate.{m}"] = "pass" if ok else "fail"
    results["gate"] = "pass" if passed else "fail"
    plot = dict(x="tau", y="sim_mean", err="sim_stderr", lines=methods)
    return Artifact(columns, rows, results, passed=passed, plot=plot)


RUNNERS = {
    "sim1d": run_sim1d,
    "sim2d": run_sim2d,
    "solve1d-iter": run_solve1d_iter,
    "solve1d-gap": run_solve1d_gap,
    "solve2d": run_solve2d,
    "plan-wifi": run_plan_wifi,
    "compare": run_compare,
}


def execute(config: ExperimentConfig) -> Artifact:
    if config.mode == "figure":
        from .figures import emit_figure_data

        return emit_figure_data(config.params["id"], config.params, jobs=config.jobs)
    return RUNNERS[config.mode](config.params, config.jobs)
