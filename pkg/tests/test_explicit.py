import numpy as np
import pytest

from ecm_invade.errors import StabilityError
from ecm_invade.explicit import ExplicitConfig, integrate, rk45_step
from ecm_invade.grid import make_grid
from ecm_invade.ic import step_ic
from ecm_invade.model import FieldPair, ModelParams


def test_rk45_zero_rhs():
    y = np.array([1.0, -2.0])
    y_new, dt_next, err = rk45_step(y, lambda v: np.zeros_like(v), 0.5, 1e-6, 1e-9)
    assert np.all(y_new == y)
    assert err == 0.0
    assert dt_next > 0.5


def test_rk45_exponential():
    y = np.array([1.0])
    y_new, _, err = rk45_step(y, lambda v: -v, 0.1, 1e-6, 1e-9)
    assert y_new[0] == pytest.approx(np.exp(-0.1), abs=1e-7)
    assert err <= 1.0


def test_rk45_steady_state_rhs():
    grid = make_grid(1, 0, 2, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    from ecm_invade.explicit import coupled_rhs

    rhs = coupled_rhs(params, grid)
    y = np.concatenate([np.ones(grid.size), np.zeros(grid.size)])
    y_new, _, _ = rk45_step(y, rhs, 0.5, 1e-6, 1e-9)
    assert np.abs(y_new - y).max() < 1e-12


def test_rk45_error_estimates_bound_accepted_steps():
    # stiffish nonlinear oscillator: every accepted step must have err <= 1
    def rhs(v):
        return np.array([v[1], -25.0 * v[0] - 0.1 * v[1] ** 3])

    y = np.array([1.0, 0.0])
    dt = 0.05
    err_prev = None
    accepted = 0
    for _ in range(400):
        y_new, dt_next, err = rk45_step(y, rhs, dt, 1e-8, 1e-10, err_prev)
        if err <= 1.0:
            y = y_new
            err_prev = err
            accepted += 1
            assert err <= 1.0
        dt = dt_next
    assert accepted > 100


def test_integrate_steady_state_fixed_point():
    grid = make_grid(1, 0, 5, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    pair = FieldPair(np.ones(grid.shape), np.zeros(grid.shape))
    cfg = ExplicitConfig(t_end=10.0, snapshot_interval=1.0)
    result = integrate(pair, params, grid, cfg)
    assert len(result.times) == 11
    for snap in result.snapshots:
        assert np.abs(snap.u - 1.0).max() < 1e-10
        assert np.abs(snap.m).max() < 1e-10


def test_integrate_snapshot_times():
    grid = make_grid(1, 0, 5, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    cfg = ExplicitConfig(t_end=2.0, snapshot_interval=0.5)
    result = integrate(step_ic(grid, params), params, grid, cfg)
    assert result.times == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_integrate_reproducible():
    grid = make_grid(1, 0, 5, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    cfg = ExplicitConfig(t_end=1.0, snapshot_interval=1.0)
    a = integrate(step_ic(grid, params), params, grid, cfg)
    b = integrate(step_ic(grid, params), params, grid, cfg)
    assert np.array_equal(a.snapshots[-1].u, b.snapshots[-1].u)
    assert np.array_equal(a.snapshots[-1].m, b.snapshots[-1].m)


def test_matrix_density_never_grows():
    grid = make_grid(1, 0, 10, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    cfg = ExplicitConfig(t_end=5.0, snapshot_interval=1.0)
    result = integrate(step_ic(grid, params), params, grid, cfg)
    for earlier, later in zip(result.snapshots, result.snapshots[1:]):
        assert np.all(later.m <= earlier.m + 1e-9)


def test_unstable_fixed_step_aborts():
    grid = make_grid(1, 0, 5, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    cfg = ExplicitConfig(
        t_end=2.0, snapshot_interval=1.0, integrator="rk4_fixed", dt_init=0.5
    )
    with pytest.raises(StabilityError):
        integrate(step_ic(grid, params), params, grid, cfg)


def test_rk4_fixed_matches_adaptive_loosely():
    grid = make_grid(1, 0, 10, 0.1)
    params = ModelParams(lam=1.0, m0=0.5)
    fine = ExplicitConfig(t_end=1.0, snapshot_interval=1.0,
                          integrator="rk4_fixed", dt_init=1e-3)
    adaptive = ExplicitConfig(t_end=1.0, snapshot_interval=1.0)
    a = integrate(step_ic(grid, params), params, grid, fine)
    b = integrate(step_ic(grid, params), params, grid, adaptive)
    assert np.abs(a.snapshots[-1].u - b.snapshots[-1].u).max() < 1e-5


def test_spatial_refinement_first_order_or_better():
    # halving dx at fixed t shrinks the solution change by at least ~2x
    params = ModelParams(lam=1.0, m0=0.5)
    t_end = 10.0
    solutions = {}
    for dx in (0.2, 0.1, 0.05):
        grid = make_grid(1, 0, 40, dx)
        cfg = ExplicitConfig(t_end=t_end, snapshot_interval=t_end,
                             rel_tol=1e-8, abs_tol=1e-11)
        result = integrate(step_ic(grid, params), params, grid, cfg)
        solutions[dx] = (grid, result.snapshots[-1])

    def diff(coarse_dx, fine_dx):
        gc, snc = solutions[coarse_dx]
        gf, snf = solutions[fine_dx]
        stride = int(round(coarse_dx / fine_dx))
        du = snc.u - snf.u[::stride]
        return float(np.sqrt(np.sum(du * du) * coarse_dx))

    d1 = diff(0.2, 0.1)
    d2 = diff(0.1, 0.05)
    print(f"refinement L2 changes: {d1:.3e} -> {d2:.3e} (ratio {d1 / d2:.2f})")
    assert d2 < d1 / 1.8
