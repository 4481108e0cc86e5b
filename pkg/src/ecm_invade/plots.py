"""Figure rendering for completed runs and sweeps.

Reads the delimited outputs a run leaves behind (snapshots, front trace,
diagnostics, sweep summary) and renders PNG figures next to them. Cells
are drawn blue and solid, matrix red and dashed, matching the usual
presentation of these profiles.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import runio
from .errors import ConfigurationError
from .waves import analytic_min_speed

_CELLS = dict(color="tab:blue", linestyle="-")
_ECM = dict(color="tab:red", linestyle="--")


def _load_run(run_dir: Path):
    cfg = runio.build_run_config(
        runio._parse_yaml((run_dir / "config.yaml").read_text(), "config.yaml"),
        allow_both_scheme_blocks=True,
    )
    snaps = runio.list_snapshots(run_dir)
    if not snaps:
        raise ConfigurationError(f"no snapshots found in {run_dir}")
    return cfg, snaps


def profile_figure(run_dir, out_dir=None, n_panels: int = 4) -> Path:
    """Density profiles at evenly selected snapshot times."""
    run_dir = Path(run_dir)
    cfg, snaps = _load_run(run_dir)
    picks = [snaps[int(round(i))] for i in np.linspace(0, len(snaps) - 1, min(n_panels, len(snaps)))]
    out = Path(out_dir or run_dir) / "profiles.png"

    if cfg.grid.dim == 1:
        x = cfg.grid.axes[0]
        fig, axes = plt.subplots(1, len(picks), figsize=(3.2 * len(picks), 3.0),
                                 sharey=True, squeeze=False)
        for ax, path in zip(axes[0], picks):
            t, pair = runio.read_snapshot(path, cfg.grid)
            ax.plot(x, pair.u, label="cells", **_CELLS)
            ax.plot(x, pair.m, label="matrix", **_ECM)
            ax.set_title(f"t = {t:g}")
            ax.set_xlabel("x")
            ax.set_ylim(-0.05, 1.05)
        axes[0][0].set_ylabel("density")
        axes[0][0].legend(loc="upper right", frameon=False)
    else:
        t, pair = runio.read_snapshot(snaps[-1], cfg.grid)
        extent = (cfg.grid.extent_min[0], cfg.grid.extent_max[0],
                  cfg.grid.extent_min[1], cfg.grid.extent_max[1])
        fig, axes = plt.subplots(1, 2, figsize=(9, 4))
        for ax, field, label, cmap in ((axes[0], pair.u, "cells", "Blues"),
                                       (axes[1], pair.m, "matrix", "Reds")):
            im = ax.imshow(field.T, origin="lower", extent=extent, cmap=cmap,
                           vmin=0.0, vmax=1.0)
            ax.set_title(f"{label}, t = {t:g}")
            fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def front_figure(run_dir, out_dir=None) -> Path | None:
    """Front position against time with the fitted and analytic speeds."""
    run_dir = Path(run_dir)
    trace_path = run_dir / "front_trace.csv"
    if not trace_path.exists():
        return None
    table = np.loadtxt(trace_path, delimiter=",", skiprows=1, ndmin=2)
    t, x = table[:, 0], table[:, 1]
    summary = json.loads((run_dir / "summary.json").read_text())
    front = summary.get("front", {})

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(t, x, ".", color="tab:blue", markersize=3, label="front position")
    speed = front.get("fitted_speed")
    if speed is not None:
        lo, hi = front.get("fit_window", (t[0], t[-1]))
        tt = np.linspace(lo, hi, 2)
        x0 = np.interp(lo, t, x)
        ax.plot(tt, x0 + speed * (tt - lo), "-", color="black",
                label=f"fit: c = {speed:.3f}")
        c_star = front.get("analytic_speed", analytic_min_speed(summary.get("m0", 0.0)))
        ax.plot(tt, x0 + c_star * (tt - lo), ":", color="gray",
                label=f"analytic: c = {c_star:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("X(t)")
    ax.legend(frameon=False)
    fig.tight_layout()
    out = Path(out_dir or run_dir) / "front_position.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def diagnostics_figure(run_dir, out_dir=None) -> Path | None:
    """Entropy and dissipation traces from the diagnostics table."""
    run_dir = Path(run_dir)
    path = run_dir / "diagnostics.csv"
    if not path.exists():
        return None
    table = np.genfromtxt(path, delimiter=",", names=True)
    if table.ndim == 0 or table.size < 2:
        return None
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
    axes[0].plot(table["time"], table["entropy"], color="tab:green")
    axes[0].set_title("entropy")
    have_w = np.isfinite(table["dissipation_tau"]).any()
    if have_w:
        axes[1].plot(table["time"], table["dissipation_tau"], label="regularisation")
        axes[1].plot(table["time"], table["dissipation_mobility"], label="mobility")
        axes[1].legend(frameon=False)
        axes[1].set_title("dissipation")
        axes[2].plot(table["time"], table["inequality_residual"], color="tab:purple")
        axes[2].axhline(0.0, color="gray", linewidth=0.8)
        axes[2].set_title("inequality residual")
    else:
        axes[1].plot(table["time"], table["grad_u_sq"], label="|grad u|^2")
        axes[1].plot(table["time"], table["grad_m_sq"], label="|grad m|^2")
        axes[1].legend(frameon=False)
        axes[1].set_title("gradient norms")
        axes[2].plot(table["time"], table["max_rho"], color="tab:purple")
        axes[2].set_title("max(u+m)")
    for ax in axes:
        ax.set_xlabel("t")
    fig.tight_layout()
    out = Path(out_dir or run_dir) / "diagnostics.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def sweep_figure(sweep_dir, out_dir=None) -> Path:
    """Fitted wave speed against degradation rate, with the analytic lines."""
    sweep_dir = Path(sweep_dir)
    records = json.loads((sweep_dir / "sweep_summary.json").read_text())
    ok = [r for r in records if r.get("fitted_speed") is not None]
    if not ok:
        raise ConfigurationError(f"sweep summary in {sweep_dir} holds no fitted speeds")
    lams = [r["lambda"] for r in ok]
    speeds = [r["fitted_speed"] for r in ok]
    m0 = ok[0].get("m0", 0.5)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(lams, speeds, "o-", color="tab:blue", label="measured")
    ax.axhline(analytic_min_speed(m0), color="tab:red", linestyle="--",
               label=f"linearised: 2(1-m0)^1/2 = {analytic_min_speed(m0):.3f}")
    ax.axhline(2.0, color="gray", linestyle=":", label="free-invasion limit: 2")
    ax.set_xlabel("degradation rate")
    ax.set_ylabel("wave speed")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    out = Path(out_dir or sweep_dir) / "speed_vs_lambda.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render(target_dir, out_dir=None) -> list[Path]:
    """Render every figure the directory's outputs support."""
    target_dir = Path(target_dir)
    written: list[Path] = []
    if (target_dir / "sweep_summary.json").exists():
        written.append(sweep_figure(target_dir, out_dir))
    if runio.list_snapshots(target_dir):
        written.append(profile_figure(target_dir, out_dir))
        for fig_fn in (front_figure, diagnostics_figure):
            path = fig_fn(target_dir, out_dir)
            if path is not None:
                written.append(path)
    if not written:
        raise ConfigurationError(
            f"{target_dir} holds neither run snapshots nor a sweep summary"
        )
    return written
