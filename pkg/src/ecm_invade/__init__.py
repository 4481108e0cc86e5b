"""Simulator for cell invasion into extracellular matrix.

A degenerate cross-diffusion equation for the cell density coupled to a
pointwise decay law for the matrix, discretised on uniform 1D/2D lattices
with zero-flux boundaries. Two time-steppers are provided: an adaptive
explicit Runge-Kutta method-of-lines solver and an implicit scheme in the
entropy variable whose iterates satisfy the box constraints strictly.
"""

from .diagnostics import EntropyReport, entropy, grad_norm_sq, mass
from .entropy_scheme import (
    EntropyState,
    SchemeConfig,
    entropy_variable,
    implicit_step,
    regularize_initial_m,
    run_entropy,
    solve_m_fixed_point,
    solve_w_linear,
    u_from_w,
)
from .explicit import ExplicitConfig, integrate, rk45_step
from .grid import Grid, coordinates, make_grid
from .ic import build_initial_fields, random_smoothed_ecm, sinusoidal_ecm, step_ic
from .model import FieldPair, ModelParams, cell_rhs, diffusive_term, ecm_rhs
from .runio import RunConfig, load_config, write_snapshot, write_sweep_summary
from .waves import WaveTrace, analytic_min_speed, estimate_speed, front_position

__version__ = "0.1.0"

__all__ = [
    "EntropyReport",
    "EntropyState",
    "ExplicitConfig",
    "FieldPair",
    "Grid",
    "ModelParams",
    "RunConfig",
    "SchemeConfig",
    "WaveTrace",
    "analytic_min_speed",
    "build_initial_fields",
    "cell_rhs",
    "coordinates",
    "diffusive_term",
    "ecm_rhs",
    "entropy",
    "entropy_variable",
    "estimate_speed",
    "front_position",
    "grad_norm_sq",
    "implicit_step",
    "integrate",
    "load_config",
    "make_grid",
    "mass",
    "random_smoothed_ecm",
    "regularize_initial_m",
    "rk45_step",
    "run_entropy",
    "sinusoidal_ecm",
    "solve_m_fixed_point",
    "solve_w_linear",
    "step_ic",
    "u_from_w",
    "write_snapshot",
    "write_sweep_summary",
]
