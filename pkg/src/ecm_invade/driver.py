"""Run orchestration: single simulations, degradation-rate sweeps, and the
explicit-vs-implicit crosscheck.

Each run writes into its own subdirectory keyed by a hash of the resolved
configuration, so reruns with identical inputs overwrite identically:

    <output_dir>/run-<hash>/
        config.yaml        resolved configuration
        snap_t*.csv        snapshots (x[,y],u,m per lattice point)
        diagnostics.csv    monitored functionals (per step for the
                           implicit scheme, per snapshot otherwise)
        front_trace.csv    front position against time, when a front exists
        summary.json       run metadata, bounds and fitted wave speed
"""
from __future__ import annotations

import copy
import logging
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import runio
from .diagnostics import EntropyReport, entropy, grad_norm_sq, quadrature_weights
from .entropy_scheme import run_entropy
from .errors import FrontNotFoundError, InsufficientDataError
from .explicit import ExplicitConfig, integrate
from .grid import Grid
from .ic import build_initial_fields
from .model import FieldPair
from .runio import RunConfig
from .waves import (
    WaveTrace,
    analytic_min_speed,
    azimuthal_front_spread,
    front_position,
    radial_front_position,
)

log = logging.getLogger("ecm_invade")


@dataclass
class RunResult:
    run_dir: Path
    summary: dict
    times: list
    snapshots: list
    trace: WaveTrace


def _snapshot_report(t: float, pair: FieldPair, grid: Grid) -> EntropyReport:
    nan = float("nan")
    rho = pair.u + pair.m
    return EntropyReport(
        time=t,
        entropy=entropy(np.clip(pair.u, 0.0, None), np.clip(pair.m, 0.0, None), grid),
        dissipation_tau=nan,
        dissipation_mobility=nan,
        inequality_residual=nan,
        grad_u_sq=grad_norm_sq(pair.u, grid),
        grad_m_sq=grad_norm_sq(pair.m, grid),
        min_u=float(pair.u.min()),
        min_m=float(pair.m.min()),
        max_rho=float(rho.max()),
        max_abs_w=nan,
    )


def _front_trace(times, snapshots, grid: Grid, threshold: float = 0.1) -> WaveTrace:
    trace = WaveTrace(threshold=threshold)
    for t, pair in zip(times, snapshots):
        try:
            if grid.dim == 1:
                x = front_position(pair.u, grid, threshold)
            else:
                x = radial_front_position(pair.u, grid, threshold)
        except FrontNotFoundError:
            continue
        trace.record(t, x)
    return trace


def _front_summary(trace: WaveTrace, m0: float, grid: Grid) -> dict:
    info: dict = {
        "threshold": trace.threshold,
        "n_points": len(trace.times),
        "analytic_speed": analytic_min_speed(m0),
    }
    if not trace.times:
        info.update(status="not_found", moved=False, fitted_speed=None)
        return info
    motion = max(trace.front_positions) - min(trace.front_positions)
    info["moved"] = bool(motion > grid.spacing)
    try:
        trace.fit()
    except InsufficientDataError:
        info.update(status="insufficient_data", fitted_speed=None)
        return info
    info.update(
        status="ok",
        fitted_speed=trace.fitted_speed,
        fit_window=list(trace.fit_window),
        fit_residual=trace.fit_residual,
    )
    return info


def run_simulation(cfg: RunConfig, out_root=None) -> RunResult:
    """Execute one simulation and persist snapshots, diagnostics, summary."""
    started = _time.perf_counter()
    run_hash = runio.config_hash(cfg.tree)
    run_dir = Path(out_root or cfg.output_dir) / f"run-{run_hash}"
    run_dir.mkdir(parents=True, exist_ok=True)
    runio.dump_config(cfg.tree, run_dir / "config.yaml")

    fields0 = build_initial_fields(cfg.grid, cfg.params, cfg.ic)
    log.info("run %s: scheme=%s lambda=%g m0=%g t_end=%g", run_hash, cfg.scheme,
             cfg.params.lam, cfg.params.m0, cfg.t_end)

    if cfg.scheme == "explicit":
        result = integrate(fields0, cfg.params, cfg.grid, cfg.explicit_cfg)
        times, snapshots = result.times, result.snapshots
        reports = [_snapshot_report(t, p, cfg.grid) for t, p in zip(times, snapshots)]
        steps = {"n_steps": result.n_steps, "n_rejected": result.n_rejected}
    else:
        result = run_entropy(
            fields0, cfg.params, cfg.grid, cfg.entropy_cfg, cfg.t_end, cfg.snapshot_interval
        )
        times, snapshots = result.times, result.snapshots
        reports = result.reports
        steps = {"n_steps": result.n_steps}

    for t, pair in zip(times, snapshots):
        runio.write_snapshot(pair, t, cfg.grid, run_dir, fmt=cfg.snapshot_format)
    runio.write_diagnostics([r.row() for r in reports], EntropyReport.columns(),
                            run_dir / "diagnostics.csv")

    trace = _front_trace(times, snapshots, cfg.grid)
    if trace.times:
        runio.write_diagnostics(
            [[t, x] for t, x in zip(trace.times, trace.front_positions)],
            ["t", "X"], run_dir / "front_trace.csv",
        )

    min_u = min(float(p.u.min()) for p in snapshots)
    min_m = min(float(p.m.min()) for p in snapshots)
    max_rho = max(float((p.u + p.m).max()) for p in snapshots)
    summary = {
        "config_hash": run_hash,
        "scheme": cfg.scheme,
        "lambda": cfg.params.lam,
        "m0": cfg.params.m0,
        "t_end": cfg.t_end,
        "grid": {"dim": cfg.grid.dim, "n_points": list(cfg.grid.n_points),
                 "spacing": cfg.grid.spacing},
        "n_snapshots": len(times),
        **steps,
        "bounds": {"min_u": min_u, "min_m": min_m, "max_rho": max_rho},
        "front": _front_summary(trace, cfg.params.m0, cfg.grid),
        "wall_time_s": _time.perf_counter() - started,
    }
    if cfg.grid.dim == 2:
        try:
            mean_r, std_r = azimuthal_front_spread(snapshots[-1].u, cfg.grid)
            summary["azimuthal"] = {"mean_radius": mean_r, "std_radius": std_r}
        except FrontNotFoundError:
            summary["azimuthal"] = None
    runio.write_run_summary(summary, run_dir / "summary.json")
    log.info("run %s: done in %.1fs (%s steps)", run_hash, summary["wall_time_s"],
             steps.get("n_steps"))
    return RunResult(run_dir, summary, times, snapshots, trace)


def member_tree(base_tree: dict, lam: float) -> dict:
    tree = copy.deepcopy(base_tree)
    tree["model"]["lambda"] = float(lam)
    return tree


def _run_member(args) -> dict:
    tree, out_root = args
    lam = float(tree["model"]["lambda"])
    m0 = float(tree["model"]["m0"])
    try:
        cfg = runio.build_run_config(tree)
        result = run_simulation(cfg, out_root=out_root)
    except Exception as exc:  # per-member failures recorded, sweep continues
        return {"lambda": lam, "m0": m0, "error": f"{type(exc).__name__}: {exc}"}
    front = result.summary["front"]
    return {
        "lambda": lam,
        "m0": cfg.params.m0,
        "fitted_speed": front.get("fitted_speed"),
        "analytic_speed": front.get("analytic_speed"),
        "residual": front.get("fit_residual"),
        "window": front.get("fit_window"),
    }


def max_workers_from_env(n_tasks: int) -> int:
    cap = os.environ.get("ECM_INVADE_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_tasks, limit))


def run_sweep(cfg: RunConfig, lambdas: list[float], out_root=None) -> tuple[list[dict], Path]:
    """Run the base configuration once per degradation rate, in parallel."""
    out_root = Path(out_root or cfg.output_dir)
    jobs = [(member_tree(cfg.tree, lam), str(out_root)) for lam in lambdas]
    workers = max_workers_from_env(len(jobs))
    if workers == 1:
        records = [_run_member(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_member, jobs))
    path = runio.write_sweep_summary(records, out_root / "sweep_summary.json")
    return sorted(records, key=lambda r: r["lambda"]), path


def solution_l2_difference(a: FieldPair, b: FieldPair, grid: Grid) -> float:
    """Discrete L2 distance between two states over both fields."""
    w = quadrature_weights(grid)
    du = a.u - b.u
    dm = a.m - b.m
    return float(math.sqrt(np.sum(w * (du * du + dm * dm))))


def run_crosscheck(cfg: RunConfig, out_root=None) -> tuple[dict, bool]:
    """Both schemes from the same initial data over a short horizon.

    The explicit solution with tightened tolerances serves as reference;
    the implicit endpoint is compared at each tau. Passes when the L2
    differences shrink monotonically as tau halves.
    """
    cc = cfg.crosscheck
    t_end = float(cc["t_end"])
    taus = sorted((float(t) for t in cc["taus"]), reverse=True)
    if not taus:
        raise InsufficientDataError("crosscheck needs at least one tau")
    fields0 = build_initial_fields(cfg.grid, cfg.params, cfg.ic)

    ref_cfg = ExplicitConfig(
        t_end=t_end, snapshot_interval=t_end,
        dt_init=cfg.explicit_cfg.dt_init, dt_max=cfg.explicit_cfg.dt_max,
        rel_tol=float(cc["rel_tol"]), abs_tol=float(cc["abs_tol"]),
        box_tol=cfg.explicit_cfg.box_tol,
    )
    log.info("crosscheck: explicit reference to t=%g", t_end)
    reference = integrate(fields0, cfg.params, cfg.grid, ref_cfg).snapshots[-1]

    diffs = []
    for tau in taus:
        entropy_cfg = copy.deepcopy(cfg.entropy_cfg)
        entropy_cfg.tau = tau
        entropy_cfg.check_contraction(cfg.params)
        log.info("crosscheck: implicit tau=%g", tau)
        run = run_entropy(fields0, cfg.params, cfg.grid, entropy_cfg, t_end, t_end)
        diffs.append(solution_l2_difference(reference, run.snapshots[-1], cfg.grid))

    ratios = [diffs[i] / diffs[i + 1] if diffs[i + 1] > 0 else float("inf")
              for i in range(len(diffs) - 1)]
    monotone = all(d_next < d for d, d_next in zip(diffs, diffs[1:]))
    report = {
        "t_end": t_end,
        "taus": taus,
        "l2_differences": diffs,
        "reduction_ratios": ratios,
        "monotone_decreasing": monotone,
    }
    if out_root is not None:
        out_dir = Path(out_root)
        out_dir.mkdir(parents=True, exist_ok=True)
        runio.write_run_summary(report, out_dir / "crosscheck.json")
    return report, monotone
