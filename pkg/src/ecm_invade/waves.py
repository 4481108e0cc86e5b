"""Travelling-wave front tracking and speed estimation.

The front position X(t) is the rightmost downward crossing of a density
threshold (default 0.1), located by linear interpolation between the
bracketing lattice points. The speed is the least-squares slope of X
against t over a fit window, by default the last half of the horizon so
the start-up transient is excluded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, FrontNotFoundError, InsufficientDataError
from .grid import Grid, make_grid

DEFAULT_THRESHOLD = 0.1


@dataclass
class WaveTrace:
    times: list[float] = field(default_factory=list)
    front_positions: list[float] = field(default_factory=list)
    threshold: float = DEFAULT_THRESHOLD
    fitted_speed: float = float("nan")
    fit_window: tuple[float, float] = (0.0, 0.0)
    fit_residual: float = float("nan")

    def record(self, t: float, x: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("trace times must be strictly increasing")
        self.times.append(t)
        self.front_positions.append(x)

    def fit(self, window: tuple[float, float] | None = None) -> "WaveTrace":
        if window is None:
            t_last = self.times[-1] if self.times else 0.0
            window = (0.5 * t_last, t_last)
        inside = [
            (t, x) for t, x in zip(self.times, self.front_positions)
            if window[0] <= t <= window[1]
        ]
        speed, residual = estimate_speed(inside, window)
        self.fitted_speed = speed
        self.fit_window = window
        self.fit_residual = residual
        return self


def front_position(u: np.ndarray, grid: Grid, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Rightmost downward crossing of the threshold in a 1D profile."""
    u = np.asarray(u, dtype=float)
    if grid.dim != 1:
        raise ValueError("front_position expects a 1D grid; reduce 2D fields along a ray first")
    u = grid.check_field(u, "u")
    x = grid.axes[0]
    above = u >= threshold
    # scan from the right for the last i with u[i] >= thr > u[i+1]
    crossings = np.nonzero(above[:-1] & ~above[1:])[0]
    if crossings.size == 0:
        raise FrontNotFoundError(
            f"profile never crosses threshold {threshold} downward "
            f"(range [{u.min():.3g}, {u.max():.3g}])"
        )
    i = int(crossings[-1])
    frac = (u[i] - threshold) / (u[i] - u[i + 1])
    return float(x[i] + frac * grid.spacing)


def estimate_speed(trace_points, fit_window) -> tuple[float, float]:
    """Least-squares slope of X(t) over the window, with RMS fit residual."""
    pts = [(t, x) for t, x in trace_points if fit_window[0] <= t <= fit_window[1]]
    if len(pts) < 3:
        raise InsufficientDataError(
            f"need at least 3 front positions inside window {fit_window}, got {len(pts)}"
        )
    t = np.array([p[0] for p in pts])
    x = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(t, x, 1)
    residual = float(np.sqrt(np.mean((x - (slope * t + intercept)) ** 2)))
    return float(slope), residual


def analytic_min_speed(m0: float) -> float:
    """Linearised minimum invasion speed 2 sqrt(1 - m0)."""
    if not 0.0 <= m0 <= 1.0:
        raise BoundsError(f"m0 must lie in [0, 1], got {m0}")
    return 2.0 * np.sqrt(1.0 - m0)


def _bilinear_sample(a: np.ndarray, grid: Grid, pts: np.ndarray) -> np.ndarray:
    x0, y0 = grid.extent_min
    fx = (pts[:, 0] - x0) / grid.spacing
    fy = (pts[:, 1] - y0) / grid.spacing
    nx, ny = grid.n_points
    ix = np.clip(np.floor(fx).astype(int), 0, nx - 2)
    iy = np.clip(np.floor(fy).astype(int), 0, ny - 2)
    tx = np.clip(fx - ix, 0.0, 1.0)
    ty = np.clip(fy - iy, 0.0, 1.0)
    return (
        a[ix, iy] * (1 - tx) * (1 - ty)
        + a[ix + 1, iy] * tx * (1 - ty)
        + a[ix, iy + 1] * (1 - tx) * ty
        + a[ix + 1, iy + 1] * tx * ty
    )


def ray_profile(a: np.ndarray, grid: Grid, angle: float = 0.0):
    """Sample a 2D field along a ray from the origin; returns (1D grid, values)."""
    if grid.dim != 2:
        raise ValueError("ray_profile expects a 2D grid")
    a = grid.check_field(a, "a")
    r_max = min(min(abs(lo), abs(hi)) for lo, hi in zip(grid.extent_min, grid.extent_max))
    n = max(3, int(np.floor(r_max / grid.spacing)) + 1)
    r = grid.spacing * np.arange(n)
    pts = np.column_stack([r * np.cos(angle), r * np.sin(angle)])
    values = _bilinear_sample(a, grid, pts)
    ray_grid = make_grid(1, 0.0, float(r[-1]), grid.spacing)
    return ray_grid, values


def radial_front_position(
    u: np.ndarray, grid: Grid, threshold: float = DEFAULT_THRESHOLD, angle: float = 0.0
) -> float:
    """Front radius along one ray through the origin of a 2D field."""
    ray_grid, values = ray_profile(u, grid, angle)
    return front_position(values, ray_grid, threshold)


def azimuthal_front_spread(
    u: np.ndarray, grid: Grid, threshold: float = DEFAULT_THRESHOLD, n_rays: int = 64
) -> tuple[float, float]:
    """Mean and standard deviation of the front radius over uniformly spaced rays."""
    radii = []
    for k in range(n_rays):
        radii.append(radial_front_position(u, grid, threshold, angle=2.0 * np.pi * k / n_rays))
    radii = np.array(radii)
    return float(radii.mean()), float(radii.std())
