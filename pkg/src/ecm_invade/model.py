"""Spatial discretisation of the invasion model.

The cell flux is split into two applications of one conservative stencil,

    d/dx [ D da/dx ]  ~  ((D[i-1]+D[i]) a[i-1]
                          - (D[i-1]+2 D[i]+D[i+1]) a[i]
                          + (D[i]+D[i+1]) a[i+1]) / (2 dx^2),

with D1 = 1-u-m acting on u and D2 = u acting on u+m, plus the logistic
source u(1-u-m). Zero normal flux is imposed by mirroring the off-grid
neighbour (a[-1] := a[1], D[-1] := D[1]); in 2D the stencil is applied per
axis and summed. The matrix field ``m`` carries no transport, only the
pointwise decay -lambda*m*u.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigurationError
from .grid import Grid

# how far outside [0,1] the explicit scheme may stray before the run aborts
DEFAULT_BOX_TOL = 1e-8


@dataclass
class ModelParams:
    lam: float = 1.0  # ECM degradation rate (lambda)
    m0: float = 0.5   # far-field ECM density

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be nonnegative, got {self.lam}")
        if not 0.0 <= self.m0 <= 1.0:
            raise ConfigurationError(f"m0 must lie in [0, 1], got {self.m0}")


@dataclass
class FieldPair:
    """Cell density u and matrix density m on a shared grid."""

    u: np.ndarray
    m: np.ndarray

    def copy(self) -> "FieldPair":
        return FieldPair(self.u.copy(), self.m.copy())

    def check(self, grid: Grid, box_tol: float = DEFAULT_BOX_TOL) -> "FieldPair":
        """Validate shapes and the volume-filling constraint up to box_tol."""
        self.u = grid.check_field(self.u, "u")
        self.m = grid.check_field(self.m, "m")
        violation = box_violation(self)
        if violation > box_tol:
            raise BoundsError(
                f"fields violate 0 <= u, m and u+m <= 1 by {violation:.3e} "
                f"(tolerance {box_tol:.1e})"
            )
        return self


def box_violation(fields: FieldPair) -> float:
    """Largest amount by which (u, m) leaves the admissible set."""
    u, m = fields.u, fields.m
    return float(max(-u.min(initial=0.0), -m.min(initial=0.0), (u + m).max(initial=0.0) - 1.0, 0.0))


def _axis_stencil(D: np.ndarray, a: np.ndarray, out: np.ndarray, inv: float) -> None:
    # along the leading axis; mirror means a[-1] := a[1], D[-1] := D[1]
    sum_left = D[:-2] + D[1:-1]
    sum_right = D[1:-1] + D[2:]
    out[1:-1] += inv * (sum_left * (a[:-2] - a[1:-1]) + sum_right * (a[2:] - a[1:-1]))
    out[0] += inv * 2.0 * (D[0] + D[1]) * (a[1] - a[0])
    out[-1] += inv * 2.0 * (D[-2] + D[-1]) * (a[-2] - a[-1])


def diffusive_term(D: np.ndarray, a: np.ndarray, grid: Grid) -> np.ndarray:
    """Conservative second-difference d/dx[D da/dx] with mirrored boundaries.

    Applied per axis and summed in 2D. Exactly conservative: the
    trapezoid-weighted sum of the result vanishes for any D and a.
    """
    D = grid.check_field(D, "D")
    a = grid.check_field(a, "a")
    inv = 1.0 / (2.0 * grid.spacing**2)
    out = np.zeros_like(a)
    _axis_stencil(D, a, out, inv)
    if grid.dim == 2:
        _axis_stencil(D.T, a.T, out.T, inv)
    return out


def cell_rhs(fields: FieldPair, params: ModelParams, grid: Grid) -> np.ndarray:
    """Full right-hand side for u: split cross-diffusion flux plus logistic growth."""
    u, m = fields.u, fields.m
    total = u + m
    free = 1.0 - total
    return (
        diffusive_term(free, u, grid)
        + diffusive_term(u, total, grid)
        + u * free
    )


def ecm_rhs(fields: FieldPair, params: ModelParams) -> np.ndarray:
    """Pointwise matrix degradation -lambda * m * u."""
    return -params.lam * fields.m * fields.u
