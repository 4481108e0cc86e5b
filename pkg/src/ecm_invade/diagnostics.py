"""Scalar functionals monitored over a run.

All integrals use trapezoidal quadrature (exact on linear fields, boundary
points carry half weight). Gradients are centered in the interior and
one-sided at the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .grid import Grid


@dataclass
class EntropyReport:
    """One monitored row per implicit step; field order fixes the CSV column order."""

    time: float
    entropy: float
    dissipation_tau: float
    dissipation_mobility: float
    inequality_residual: float
    grad_u_sq: float
    grad_m_sq: float
    min_u: float
    min_m: float
    max_rho: float
    max_abs_w: float

    @staticmethod
    def columns() -> list[str]:
        return [f.name for f in dataclass_fields(EntropyReport)]

    def row(self) -> list[float]:
        return [getattr(self, name) for name in self.columns()]


def quadrature_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights: product over axes of dx * [1/2, 1, ..., 1, 1/2]."""
    w = None
    for n in grid.n_points:
        wk = np.full(n, grid.spacing)
        wk[0] *= 0.5
        wk[-1] *= 0.5
        w = wk if w is None else np.multiply.outer(w, wk)
    return w


def mass(a: np.ndarray, grid: Grid) -> float:
    """Trapezoidal integral of a over the domain."""
    a = grid.check_field(a, "a")
    return float(np.sum(quadrature_weights(grid) * a))


def gradient(a: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Per-axis derivative estimates: centered interior, one-sided boundaries."""
    a = grid.check_field(a, "a")
    return list(np.gradient(a, grid.spacing)) if grid.dim > 1 else [np.gradient(a, grid.spacing)]


def grad_norm_sq(a: np.ndarray, grid: Grid) -> float:
    """Trapezoidal integral of |grad a|^2."""
    g2 = sum(g * g for g in gradient(a, grid))
    return float(np.sum(quadrature_weights(grid) * g2))


def _xlogx_minus_x(x: np.ndarray) -> np.ndarray:
    # x (log x - 1) with the removable limit 0 at x = 0
    out = np.zeros_like(x)
    pos = x > 0.0
    xp = x[pos]
    out[pos] = xp * (np.log(xp) - 1.0)
    return out


def entropy(u: np.ndarray, m: np.ndarray, grid: Grid) -> float:
    """Mixing entropy of cells against free space,

    integral of u(log u - 1) + (1-u-m)(log(1-u-m) - 1),

    with the conventions 0*log 0 = 0 and the second term dropped where
    u + m = 1 (both removable limits).
    """
    u = grid.check_field(u, "u")
    m = grid.check_field(m, "m")
    free = np.maximum(1.0 - u - m, 0.0)
    integrand = _xlogx_minus_x(np.maximum(u, 0.0)) + _xlogx_minus_x(free)
    return float(np.sum(quadrature_weights(grid) * integrand))
