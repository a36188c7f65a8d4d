"""Homodyne phase-noise spectrum of a driven optical cavity whose end
mirror is a quantum Brownian oscillator."""

__version__ = "0.1.0"

from .kernels import KernelConfig, Model, NoiseModel, thermal_factor
from .params import CONSTANTS, DerivedParams, ParameterError, PhysicalParams, derive, fig2_params, validate
from .spectrum import SpectrumResult, compare_models, spectrum_at, spectrum_grid
from .steady_state import SteadyState, solve_all, solve_resonant, sweep_bistability

__all__ = [
    "__version__",
    "CONSTANTS",
    "DerivedParams",
    "KernelConfig",
    "Model",
    "NoiseModel",
    "ParameterError",
    "PhysicalParams",
    "SpectrumResult",
    "SteadyState",
    "compare_models",
    "derive",
    "fig2_params",
    "solve_all",
    "solve_resonant",
    "spectrum_at",
    "spectrum_grid",
    "sweep_bistability",
    "thermal_factor",
    "validate",
]
