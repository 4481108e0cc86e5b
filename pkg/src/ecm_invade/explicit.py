"""Method-of-lines explicit integration of the coupled system.

Space is discretised by :mod:`ecm_invade.model`; the resulting ODE system
is advanced by an embedded Dormand-Prince 5(4) pair with PI step-size
control (default) or by fixed-step classical RK4 for convergence studies.
Snapshots are produced by stepping exactly onto the snapshot times rather
than by dense-output interpolation, so reruns are bit-reproducible.

Undershoots are never clipped: a state outside the admissible set by more
than ``box_tol`` at a snapshot aborts the run, since clipping would mask
an instability.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, StabilityError
from .grid import Grid
from .model import DEFAULT_BOX_TOL, FieldPair, ModelParams, cell_rhs, ecm_rhs

MIN_DT = 1e-12

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth-order weights minus the embedded fourth-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
# PI controller exponents for a 4th-order error estimate
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass
class ExplicitConfig:
    t_end: float = 100.0
    snapshot_interval: float = 1.0
    integrator: str = "rk45_adaptive"  # or "rk4_fixed"
    dt_init: float = 1e-4
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    dt_max: float = 1.0
    box_tol: float = DEFAULT_BOX_TOL

    def __post_init__(self):
        if self.t_end <= 0:
            raise ConfigurationError("t_end must be positive")
        if not 0 < self.snapshot_interval <= self.t_end:
            raise ConfigurationError("snapshot_interval must lie in (0, t_end]")
        if self.integrator not in ("rk45_adaptive", "rk4_fixed"):
            raise ConfigurationError(f"unknown integrator {self.integrator!r}")
        if min(self.dt_init, self.rel_tol, self.abs_tol, self.dt_max) <= 0:
            raise ConfigurationError("dt_init, tolerances and dt_max must be positive")


@dataclass
class IntegrationResult:
    times: list[float] = field(default_factory=list)
    snapshots: list[FieldPair] = field(default_factory=list)
    n_steps: int = 0
    n_rejected: int = 0


_A_ROWS = [np.array(row) for row in _A]


def _dp54_core(y, rhs, dt, rel_tol, abs_tol, err_prev=None, k1=None):
    """One embedded step; returns (y_new, dt_next, err, k_last).

    ``k1`` may carry the last stage of the previous accepted step (the
    pair is first-same-as-last); ``k_last`` is the derivative at y_new,
    valid for that reuse only when the step is accepted.
    """
    k = np.empty((7,) + y.shape)
    k[0] = rhs(y) if k1 is None else k1
    for i in range(1, 7):
        yi = y + dt * np.dot(_A_ROWS[i], k[:i])
        k[i] = rhs(yi)
    y_new = y + dt * np.dot(_B5, k)
    diff = dt * np.dot(_E, k)
    if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(diff))):
        raise StabilityError("non-finite right-hand side during RK stage evaluation")
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    err = float(np.sqrt(np.mean((diff / scale) ** 2)))

    if err == 0.0:
        fac = _FAC_MAX
    elif err <= 1.0 and err_prev is not None and err_prev > 0.0:
        fac = _SAFETY * err ** (-_ALPHA) * err_prev**_BETA
    else:
        fac = _SAFETY * err**-0.2
    dt_next = dt * min(_FAC_MAX, max(_FAC_MIN, fac))
    return y_new, dt_next, err, k[6]


def rk45_step(y, rhs, dt, rel_tol, abs_tol, err_prev=None):
    """One embedded Dormand-Prince 5(4) step.

    Returns ``(y_new, dt_next, error_estimate)`` where the estimate is the
    weighted RMS norm of the embedded difference; the step should be
    accepted iff the estimate is <= 1. ``dt_next`` comes from a PI
    controller fed with the previous accepted estimate, when available.
    """
    y = np.asarray(y, dtype=float)
    y_new, dt_next, err, _ = _dp54_core(y, rhs, dt, rel_tol, abs_tol, err_prev)
    return y_new, dt_next, err


def _rk4_step(y, rhs, dt):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_new)):
        raise StabilityError("non-finite state during RK4 step")
    return y_new


def coupled_rhs(params: ModelParams, grid: Grid):
    """Flat-vector right-hand side for the coupled (u, m) system."""
    n = grid.size
    shape = grid.shape

    def rhs(y: np.ndarray) -> np.ndarray:
        pair = FieldPair(y[:n].reshape(shape), y[n:].reshape(shape))
        return np.concatenate(
            [cell_rhs(pair, params, grid).ravel(), ecm_rhs(pair, params).ravel()]
        )

    return rhs


def _check_snapshot(pair: FieldPair, t: float, grid: Grid, box_tol: float) -> None:
    u, m = pair.u, pair.m
    worst = np.maximum(np.maximum(-u, -m), (u + m) - 1.0)
    idx = tuple(int(i) for i in np.unravel_index(int(np.argmax(worst)), grid.shape))
    if worst[idx] > box_tol:
        raise StabilityError(
            f"box constraint violated by {worst[idx]:.3e} at grid index {idx} "
            f"(t = {t:.6g}); the scheme has gone unstable"
        )


def integrate(
    fields0: FieldPair,
    params: ModelParams,
    grid: Grid,
    cfg: ExplicitConfig,
) -> IntegrationResult:
    """Advance (u, m) from t=0 to t_end, emitting snapshots each interval.

    Raises :class:`StabilityError` on step-size underflow or when a
    snapshot violates the box constraints beyond ``cfg.box_tol``.
    """
    fields0 = fields0.copy().check(grid, cfg.box_tol)
    n = grid.size
    y = np.concatenate([fields0.u.ravel(), fields0.m.ravel()])
    rhs = coupled_rhs(params, grid)

    def unpack(yv: np.ndarray) -> FieldPair:
        return FieldPair(yv[:n].reshape(grid.shape).copy(), yv[n:].reshape(grid.shape).copy())

    result = IntegrationResult()
    result.times.append(0.0)
    result.snapshots.append(unpack(y))

    n_snaps = int(round(cfg.t_end / cfg.snapshot_interval))
    boundaries = [cfg.snapshot_interval * (i + 1) for i in range(n_snaps)]
    if boundaries[-1] < cfg.t_end - 1e-9 * cfg.t_end:
        boundaries.append(cfg.t_end)

    t = 0.0
    dt_ctrl = min(cfg.dt_init, cfg.dt_max)
    err_prev = None
    k_first = None  # first-same-as-last reuse; stays valid across rejections
    for t_target in boundaries:
        while t < t_target - 1e-12 * max(1.0, t_target):
            dt = min(dt_ctrl, cfg.dt_max, t_target - t)
            clamped = dt < dt_ctrl
            if cfg.integrator == "rk4_fixed":
                y = _rk4_step(y, rhs, dt)
                t = t_target if clamped else t + dt
                result.n_steps += 1
                continue
            y_new, dt_next, err, k_last = _dp54_core(
                y, rhs, dt, cfg.rel_tol, cfg.abs_tol, err_prev, k1=k_first
            )
            if err <= 1.0:
                y = y_new
                t = t_target if dt >= t_target - t else t + dt
                err_prev = max(err, 1e-10)
                k_first = k_last
                result.n_steps += 1
                if not clamped:
                    dt_ctrl = dt_next
            else:
                result.n_rejected += 1
                dt_ctrl = dt_next
                if dt_ctrl < MIN_DT:
                    raise StabilityError(
                        f"adaptive step size underflowed ({dt_ctrl:.3e}) at t = {t:.6g}"
                    )
        t = t_target
        pair = unpack(y)
        _check_snapshot(pair, t, grid, cfg.box_tol)
        result.times.append(t)
        result.snapshots.append(pair)
    return result
