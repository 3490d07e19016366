"""Calculus on path space: cylinder functions, gradients, Dirichlet forms, IBP."""

from .calculus import (
    IBPResult,
    damped_weight,
    dirichlet_form,
    energy_samples,
    fd_directional_gradient,
    gradient,
    gradient_of_expectation,
    ibp_residual,
    ibp_samples,
    inner_H,
    directional_derivative,
)
from .cutoff import CutoffProcess, cutoff, hitting_time, rho_hat
from .cylinder import CylinderFunction, Integrand, leg_weights, window_weights
from .directions import DirectionField, bump, ramp, symmetric_bump
from .ensemble import EnsembleSpec
from .library import get_direction, get_function

__all__ = [
    "CutoffProcess", "CylinderFunction", "DirectionField", "EnsembleSpec", "IBPResult", "Integrand",
    "bump", "cutoff", "damped_weight", "directional_derivative", "dirichlet_form", "energy_samples",
    "fd_directional_gradient", "get_direction", "get_function", "gradient", "gradient_of_expectation",
    "hitting_time", "ibp_residual", "ibp_samples", "inner_H", "leg_weights", "ramp", "rho_hat",
    "symmetric_bump", "window_weights",
]
