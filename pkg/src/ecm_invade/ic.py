"""Initial-condition constructors for the four experimental setups.

Cells always start as the indicator of the unit ball around the origin
(the left end of the domain in 1D). The matrix starts as one of: the
complementary constant plateau, a seeded random field smoothed by a
truncated Gaussian filter, or a sinusoid. Every assembled pair satisfies
0 <= u, m and u + m <= 1.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError
from .grid import Grid, coordinates
from .model import FieldPair, ModelParams

# the random matrix field is clamped just below full occupancy
_ECM_CEILING = 1.0 - 1e-6
FILTER_TRUNCATE = 4.0  # kernel radius in units of sigma


def _radius(grid: Grid) -> np.ndarray:
    coords = coordinates(grid)
    if grid.dim == 1:
        return np.abs(coords)
    return np.sqrt(coords[:, 0] ** 2 + coords[:, 1] ** 2).reshape(grid.shape)


def step_ic(grid: Grid, params: ModelParams) -> FieldPair:
    """Cells fill |x| < 1 at capacity; matrix sits at m0 outside."""
    inside = _radius(grid) < 1.0
    u = np.where(inside, 1.0, 0.0)
    m = np.where(inside, 0.0, params.m0)
    return FieldPair(u, m)


def gaussian_kernel_1d(sigma: float, truncate: float = FILTER_TRUNCATE) -> np.ndarray:
    """Normalised discrete Gaussian, truncated at radius ceil(truncate*sigma)."""
    radius = int(np.ceil(truncate * sigma))
    k = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (k / sigma) ** 2)
    return kernel / kernel.sum()


def random_smoothed_ecm(
    grid: Grid, m0_mean: float, sigma: float, seed: int
) -> np.ndarray:
    """Seeded uniform noise, Gaussian-smoothed and rescaled to a target mean.

    sigma is measured in lattice units. The filter uses reflective
    boundary extension and a kernel truncated at 4 sigma; a constant field
    passes through unchanged. Cleared to zero inside |x| < 1 where the
    cells start at capacity.
    """
    if sigma <= 0:
        raise ConfigurationError(f"filter sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.0, 1.0, size=grid.shape)
    smooth = ndimage.gaussian_filter(raw, sigma=sigma, mode="reflect", truncate=FILTER_TRUNCATE)
    smooth *= m0_mean / smooth.mean()
    m = np.clip(smooth, 0.0, _ECM_CEILING)
    m[_radius(grid) < 1.0] = 0.0
    return m


def sinusoidal_ecm(grid: Grid) -> np.ndarray:
    """Long-wavelength oscillatory matrix profile 0.5 + 0.25 sin(x/10)."""
    if grid.dim != 1:
        raise ConfigurationError("sinusoidal matrix profile is defined in 1D only")
    return 0.5 + 0.25 * np.sin(grid.axes[0] / 10.0)


def build_initial_fields(grid: Grid, params: ModelParams, spec: dict) -> FieldPair:
    """Assemble (u, m) from an ic config block: kind plus optional keys.

    Kinds: "step" (plateau m0), "random_gaussian" (keys sigma, seed, and
    an optional mean defaulting to m0), "sinusoidal". The matrix is zeroed
    where the cells start at capacity so that u + m <= 1 holds everywhere.
    """
    kind = spec.get("kind", "step")
    pair = step_ic(grid, params)
    if kind == "step":
        return pair
    if kind == "random_gaussian":
        m = random_smoothed_ecm(
            grid,
            m0_mean=float(spec.get("mean", params.m0)),
            sigma=float(spec.get("sigma", 5.0)),
            seed=int(spec.get("seed", 0)),
        )
        return FieldPair(pair.u, m)
    if kind == "sinusoidal":
        m = sinusoidal_ecm(grid)
        m[_radius(grid) < 1.0] = 0.0
        return FieldPair(pair.u, m)
    raise ConfigurationError(f"unknown ic kind {kind!r}")
