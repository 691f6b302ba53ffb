"""Monte Carlo and finite-difference tools for decoupled FBSDEs with degenerate volatility."""

from ._core import (
    Estimate,
    FdSolution,
    NumericalError,
    ValidationError,
    bachelier_digital,
    brownian_increments,
    estimate_u,
    estimate_ux,
    example1_u,
    example1_ux_at_zero,
    example1_z_exponent,
    gaussian_abs_moment,
    in_gamma0,
    list_experiments,
    list_models,
    philox4x32,
    run_experiment,
    solve_fd,
)

__all__ = [
    "Estimate",
    "FdSolution",
    "NumericalError",
    "ValidationError",
    "bachelier_digital",
    "brownian_increments",
    "estimate_u",
    "estimate_ux",
    "example1_u",
    "example1_ux_at_zero",
    "example1_z_exponent",
    "gaussian_abs_moment",
    "in_gamma0",
    "list_experiments",
    "list_models",
    "philox4x32",
    "run_experiment",
    "solve_fd",
]
