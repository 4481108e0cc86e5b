import numpy as np
import pytest

from ecm_invade.errors import ConfigurationError
from ecm_invade.grid import make_grid
from ecm_invade.ic import (
    build_initial_fields,
    gaussian_kernel_1d,
    random_smoothed_ecm,
    sinusoidal_ecm,
    step_ic,
)
from ecm_invade.model import ModelParams, box_violation


def test_step_ic_1d_values():
    g = make_grid(1, 0, 2, 0.5)
    pair = step_ic(g, ModelParams(m0=0.5))
    x = g.axes[0]
    assert pair.u[x == 0.5][0] == 1.0 and pair.m[x == 0.5][0] == 0.0
    assert pair.u[x == 1.0][0] == 0.0 and pair.m[x == 1.0][0] == 0.5


def test_step_ic_2d_outside_ball():
    g = make_grid(2, -5, 5, 1.0)
    pair = step_ic(g, ModelParams(m0=0.5))
    i = np.where(g.axes[0] == 3.0)[0][0]
    j = np.where(g.axes[1] == 4.0)[0][0]
    assert pair.u[i, j] == 0.0
    assert pair.m[i, j] == 0.5
    assert box_violation(pair) == 0.0


def test_impulse_response_matches_analytic_kernel():
    sigma = 5.0
    g = make_grid(1, 0, 100, 1.0)
    # route the impulse through the same filter used for the random field
    from scipy import ndimage

    impulse = np.zeros(g.shape)
    impulse[50] = 1.0
    filtered = ndimage.gaussian_filter(impulse, sigma=sigma, mode="reflect", truncate=4.0)
    kernel = gaussian_kernel_1d(sigma)
    radius = kernel.size // 2
    assert np.abs(filtered[50 - radius:50 + radius + 1] - kernel).max() < 1e-6
    assert filtered[50] == pytest.approx(kernel[radius], abs=1e-12)


def test_filter_preserves_constants():
    from scipy import ndimage

    const = np.full(400, 0.7)
    filtered = ndimage.gaussian_filter(const, sigma=5.0, mode="reflect", truncate=4.0)
    assert np.abs(filtered - 0.7).max() < 1e-12


def test_random_ecm_deterministic():
    g = make_grid(1, 0, 50, 0.1)
    a = random_smoothed_ecm(g, 0.5, 5.0, seed=42)
    b = random_smoothed_ecm(g, 0.5, 5.0, seed=42)
    assert np.array_equal(a, b)
    c = random_smoothed_ecm(g, 0.5, 5.0, seed=43)
    assert not np.array_equal(a, c)


def test_random_ecm_mean_and_mask():
    g = make_grid(1, 0, 50, 0.1)
    m = random_smoothed_ecm(g, 0.5, 5.0, seed=1)
    x = g.axes[0]
    assert np.all(m[x < 1.0] == 0.0)
    inside = m[x >= 1.0]
    assert inside.mean() == pytest.approx(0.5, abs=0.05)
    assert m.min() >= 0.0 and m.max() < 1.0


def test_random_ecm_2d_shape():
    g = make_grid(2, -5, 5, 0.5)
    m = random_smoothed_ecm(g, 0.4, 2.0, seed=3)
    assert m.shape == g.shape
    assert m.min() >= 0.0


def test_sinusoidal_values():
    g = make_grid(1, 0, 200, 0.1)
    m = sinusoidal_ecm(g)
    x = g.axes[0]
    assert m[0] == pytest.approx(0.5)
    assert np.allclose(m, 0.5 + 0.25 * np.sin(x / 10.0))
    assert m.min() >= 0.25 - 1e-12 and m.max() <= 0.75 + 1e-12
    # peak value 0.75 attained near x = 5 pi
    k = int(np.argmin(np.abs(x - 5 * np.pi)))
    assert m[k] == pytest.approx(0.75, abs=1e-4)


def test_sinusoidal_needs_1d():
    with pytest.raises(ConfigurationError):
        sinusoidal_ecm(make_grid(2, -5, 5, 1.0))


@pytest.mark.parametrize("kind", ["step", "random_gaussian", "sinusoidal"])
def test_assembled_pairs_admissible(kind):
    g = make_grid(1, 0, 60, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    pair = build_initial_fields(g, params, {"kind": kind, "sigma": 5.0, "seed": 7})
    assert box_violation(pair) == 0.0
    assert pair.u.max() == 1.0


def test_assemble_unknown_kind():
    g = make_grid(1, 0, 5, 0.1)
    with pytest.raises(ConfigurationError):
        build_initial_fields(g, ModelParams(), {"kind": "bumps"})
