"""Uniform 1D/2D lattices shared by both time-stepping schemes.

Fields on a grid are plain numpy arrays of shape ``grid.shape``: ``(nx,)``
in 1D and ``(nx, ny)`` in 2D, stored row-major so that point ``(i, j)``
lives at flat index ``i * ny + j``. Zero-flux boundaries are not part of
the grid itself; they are realised inside the stencils by mirroring.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

# relative slack when checking that the extent is a whole number of spacings
_DIVISIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform lattice: same spacing on every axis, at least 3 points per axis."""

    dim: int
    extent_min: tuple[float, ...]
    extent_max: tuple[float, ...]
    spacing: float
    n_points: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_points

    @property
    def size(self) -> int:
        return int(np.prod(self.n_points))

    @property
    def axes(self) -> list[np.ndarray]:
        """Per-axis coordinate vectors."""
        return [
            self.extent_min[k] + self.spacing * np.arange(self.n_points[k])
            for k in range(self.dim)
        ]

    def volume(self) -> float:
        """Measure of the domain, prod of (extent_max - extent_min)."""
        return float(np.prod([hi - lo for lo, hi in zip(self.extent_min, self.extent_max)]))

    def check_field(self, a: np.ndarray, name: str = "field") -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape != self.shape:
            raise ShapeError(f"{name} has shape {a.shape}, expected {self.shape} for this grid")
        return a


def _as_per_axis(value, dim: int) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return tuple(float(arr[0]) for _ in range(dim))
    if arr.size != dim:
        raise ConfigurationError(f"expected scalar or {dim} values per axis, got {arr.size}")
    return tuple(float(v) for v in arr)


def make_grid(dim: int, extent_min, extent_max, spacing: float) -> Grid:
    """Build a uniform grid; extents must be whole multiples of the spacing.

    ``extent_min``/``extent_max`` may be scalars (shared by all axes) or
    one value per axis.
    """
    if dim not in (1, 2):
        raise ConfigurationError(f"dim must be 1 or 2, got {dim}")
    if spacing <= 0:
        raise ConfigurationError(f"spacing must be positive, got {spacing}")
    lo = _as_per_axis(extent_min, dim)
    hi = _as_per_axis(extent_max, dim)
    n_points = []
    for k in range(dim):
        length = hi[k] - lo[k]
        if length <= 0:
            raise ConfigurationError(
                f"extent_max must exceed extent_min on axis {k}: [{lo[k]}, {hi[k]}]"
            )
        n_cells = length / spacing
        if abs(n_cells - round(n_cells)) > _DIVISIBILITY_RTOL * max(1.0, n_cells):
            raise ConfigurationError(
                f"extent length {length} on axis {k} is not an integer multiple "
                f"of spacing {spacing}"
            )
        n = int(round(n_cells)) + 1
        if n < 3:
            raise ConfigurationError(f"grid needs at least 3 points per axis, got {n} on axis {k}")
        n_points.append(n)
    return Grid(dim, lo, hi, float(spacing), tuple(n_points))


def coordinates(grid: Grid) -> np.ndarray:
    """Row-major enumeration of lattice coordinates.

    Returns shape ``(n,)`` in 1D and ``(n, 2)`` in 2D, matching the flat
    index map ``(i, j) -> i * ny + j``.
    """
    if grid.dim == 1:
        return grid.axes[0].copy()
    xs, ys = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    return np.column_stack([xs.ravel(), ys.ravel()])
