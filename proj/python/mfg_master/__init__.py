"""Particle solver for the short-time master equation of a potential mean field game.

Configurations are numpy arrays of shape (N, d), one row per cell.
"""

from ._core import (
    FdSteps,
    MfgError,
    PotentialSet,
    SolveOptions,
    TrigSeries,
    grad_V,
    grad_u,
    hj_residual,
    master_residual,
    random_instance,
    solve_pack,
    value_u,
    value_V,
    wasserstein2,
)

__all__ = [
    "FdSteps",
    "MfgError",
    "PotentialSet",
    "SolveOptions",
    "TrigSeries",
    "grad_V",
    "grad_u",
    "hj_residual",
    "master_residual",
    "random_instance",
    "solve_pack",
    "value_u",
    "value_V",
    "wasserstein2",
]
