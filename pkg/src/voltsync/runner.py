"""Executes run plans: integrates each sub-scenario, runs the requested
analyses and writes CSV/JSON outputs."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .bulk import (
    admissible_network_size,
    analytic_bulk_with_ramps,
    asymptotic_means,
    bulk_mean_series,
    bulk_params_for,
    voltage_envelope,
)
from .config import RunPlan, load_config, parse_config_text, build_plan
from .dynamics import integrate
from .errors import IoFailure, NumericalError, UnknownPreset
from .metrics import ReturnTimeSpec, return_time, steady_state_deviation_check, sync_check
from .model import reduce_full_model
from .stability import analyze, find_fixed_point

log = logging.getLogger(__name__)

PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")
SYNC_TOL = 1e-6


@dataclass
class RunResult:
    name: str
    out_dir: Path
    files: list = field(default_factory=list)
    report: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 3 if self.failures else 0


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("voltsync").joinpath("presets", f"{name}.toml").read_text(encoding="utf-8")


def preset_plan(name: str, *, dt=None, t_final=None, analyses=None) -> RunPlan:
    raw = parse_config_text(preset_text(name), f"preset:{name}")
    return build_plan(raw, source=f"preset:{name}", dt=dt, t_final=t_final, analyses=analyses)


def _uniform(values) -> bool:
    return bool(np.all(values == values[0]))


def _final_powers(scenario):
    P = scenario.model.P_star.copy()
    for q in scenario.perturbations:
        P[q.node] += q.P_dist
    return P


def _stability(scenario, traj):
    model = scenario.model
    if not model.is_reduced:
        model = reduce_full_model(model)
    model = model.with_powers(_final_powers(scenario))
    if np.all(model.gamma == 0) and abs(model.P_star.sum()) > 1e-12:
        return {
            "fixed_point": None,
            "reason": f"gamma = 0 with power imbalance {model.P_star.sum():.6g}: "
                      "no fixed point in the deviation frame",
        }
    if traj is not None and not traj.diverged and len(traj):
        guess = (traj.theta[-1], traj.E[-1])
    else:
        guess = (scenario.initial_state.theta, scenario.initial_state.E)
    fp = find_fixed_point(model, guess)
    return analyze(model, fp).to_json()


def _bulk(scenario, traj, out_dir, label, files):
    series = bulk_mean_series(traj)
    m = scenario.model
    entry = {}
    extra = {}
    uniform = _uniform(m.alpha) and _uniform(m.gamma)
    if uniform:
        th, om = analytic_bulk_with_ramps(
            float(m.alpha[0]), float(m.gamma[0]), m.N, float(m.P_star.sum()), scenario.perturbations,
            series.times, float(scenario.initial_state.theta.mean()), float(scenario.initial_state.omega.mean()),
        )
        extra["theta_bar_analytic"] = th
        extra["omega_bar_analytic"] = om
        p = bulk_params_for(scenario)
        th_inf, om_inf = asymptotic_means(p)
        entry["asymptotic_theta_bar"] = th_inf
        entry["asymptotic_omega_bar"] = om_inf
    if m.metadata.get("topology") == "all_to_all" and uniform and all(
        _uniform(v) for v in (m.T_d, m.E_f, m.X)
    ):
        p = bulk_params_for(scenario)
        env = voltage_envelope(p, series.times)
        extra["E_upper_bound"] = env.upper_bound
        extra["E_lower_bound"] = env.lower_bound
        entry["envelope"] = env.to_json()
        lo, hi, sizes = admissible_network_size(p.X, p.B0, p.B1)
        entry["admissible_size"] = {"N_min": lo, "N_max": hi, "sizes": sizes, "N_admissible": p.N in sizes}
    files.append(io.write_bulk_csv(out_dir / f"{label}_bulk.csv", series, f0=m.f0, extra=extra))
    entry["steady_state"] = steady_state_deviation_check(traj, m, scenario.perturbations)
    late = traj.times >= traj.times[-1] - 50.0
    entry["E_bar_final"] = float(series.E_bar[-1])
    entry["E_bar_std_last_50"] = float(series.E_bar[late].std())
    return entry


def run_one(label, swept, scenario, out_dir: Path) -> dict:
    """All analyses of one sub-scenario; returns its report entry."""
    analyses = scenario.analyses
    files = []
    entry = {"label": label, "swept": swept, "N": scenario.model.N, "failures": []}
    traj = None
    try:
        if any(a in analyses for a in ("simulate", "bulk", "return-time")):
            traj = integrate(scenario, raise_on_divergence=False)
            entry["diverged"] = bool(traj.diverged)
            entry["t_diverged"] = traj.t_diverged
            if traj.diverged:
                entry["failures"].append(f"{label}: trajectory diverged at t={traj.t_diverged:.4g}")
            if "voltage_nonpositive_at" in traj.metadata:
                entry["voltage_nonpositive_at"] = traj.metadata["voltage_nonpositive_at"]
        if "simulate" in analyses:
            files.append(io.write_trajectory_csv(out_dir / f"{label}_trajectory.csv", traj))
            entry["final_state"] = {
                "t": float(traj.times[-1]),
                "theta": traj.theta[-1],
                "omega": traj.omega[-1],
                "E": traj.E[-1],
            }
            if not traj.diverged:
                entry["synchronized"] = sync_check(traj, SYNC_TOL)
        if "bulk" in analyses:
            entry["bulk"] = _bulk(scenario, traj, out_dir, label, files)
        if "return-time" in analyses:
            rts = scenario.return_time
            spec = ReturnTimeSpec(T=rts.T, xi=rts.xi, t_perturb_end=scenario.t_perturb_end)
            if traj.diverged:
                entry["return_time"] = {"return_time": None, "converged": False, "pointwise_return_time": None}
            else:
                entry["return_time"] = return_time(traj.times, traj.E.mean(axis=1), spec).to_json()
            entry["return_time"].update({"T": rts.T, "xi": rts.xi})
        if "stability" in analyses:
            entry["stability"] = _stability(scenario, None if traj is None else traj)
    except NumericalError as exc:
        entry["failures"].append(f"{label}: {type(exc).__name__}: {exc}")
    entry["files"] = [f.name for f in files]
    return entry


def execute_plan(plan: RunPlan, out_dir, *, max_workers=None) -> RunResult:
    out_dir = Path(out_dir)
    workers = max_workers or min(len(plan.scenarios), os.cpu_count() or 1)
    jobs = plan.scenarios
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda j: run_one(j[0], j[1], j[2], out_dir), jobs))
    else:
        entries = [run_one(label, swept, scen, out_dir) for label, swept, scen in jobs]

    result = RunResult(name=plan.name, out_dir=out_dir)
    for e in entries:
        result.files.extend(out_dir / f for f in e["files"])
        result.failures.extend(e["failures"])

    if plan.sweep_keys:
        result.files.append(_write_sweep_summary(plan, entries, out_dir))
        if "return-time" in plan.analyses and len(plan.sweep_keys) == 1:
            key = plan.sweep_keys[0]
            rows = []
            for (label, swept, _), e in zip(jobs, entries):
                if isinstance(swept[key], (int, float)) and not isinstance(swept[key], bool):
                    rows.append((swept[key], _rt_result(e)))
            if len(rows) == len(entries):
                result.files.append(io.write_return_time_csv(out_dir / f"{plan.name}_return_time.csv", rows, key))

    report_path = out_dir / f"{plan.name}_report.json"
    result.report = {
        "schema_version": 1,
        "name": plan.name,
        "analyses": list(plan.analyses),
        "sweep_keys": list(plan.sweep_keys),
        "omega_frame": "deviation",
        "runs": entries,
        "failures": result.failures,
        "files": sorted({p.name for p in result.files} | {report_path.name}),
    }
    result.files.append(io.write_json(report_path, result.report))
    for msg in result.failures:
        log.warning(msg)
    return result


def _rt_result(entry):
    from .metrics import ReturnTimeResult

    rt = entry.get("return_time") or {}
    return ReturnTimeResult(rt.get("return_time"), bool(rt.get("converged")), rt.get("pointwise_return_time"))


def _write_sweep_summary(plan, entries, out_dir):
    keys = list(plan.sweep_keys)
    lines = [",".join(keys + ["label", "diverged", "omega_bar_final", "theta_bar_final", "E_bar_final",
                              "return_time", "verdict"])]

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(float(v)) if isinstance(v, float) else str(v)
        return '"' + io.dumps(v).replace("\n", "").replace(" ", "").replace('"', "'") + '"'

    for e in entries:
        fs = e.get("final_state") or {}
        om = float(np.mean(fs["omega"])) if fs else None
        th = float(np.mean(fs["theta"])) if fs else None
        E = float(np.mean(fs["E"])) if fs else (e.get("bulk") or {}).get("E_bar_final")
        rt = (e.get("return_time") or {}).get("return_time")
        verdict = (e.get("stability") or {}).get("verdict")
        row = [cell(e["swept"][k]) for k in keys] + [
            e["label"], cell(e.get("diverged")), cell(om), cell(th), cell(E), cell(rt), verdict or "",
        ]
        lines.append(",".join(row))
    path = out_dir / f"{plan.name}_sweep.csv"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def run_preset(name, out_dir, *, dt=None, t_final=None, max_workers=None) -> RunResult:
    """Run a packaged figure preset into ``out_dir``."""
    return execute_plan(preset_plan(name, dt=dt, t_final=t_final), out_dir, max_workers=max_workers)


def run_scenario(config_path, out_dir, *, dt=None, t_final=None, analyses=None, max_workers=None) -> RunResult:
    """Run a TOML scenario file into ``out_dir``."""
    plan = load_config(config_path, dt=dt, t_final=t_final, analyses=analyses)
    return execute_plan(plan, out_dir, max_workers=max_workers)
