"""Numerical study of nonlinear smoothing for the Ostrovsky equation on the line."""

__version__ = "0.1.0"

from .dispersion import DispersionParams, ResonantRegimeError, free_evolution, phase, resonance
from .evolve import EvolutionConfig, Trajectory, evolve
from .spectral import FrequencyGrid, SpectralField, make_grid, sobolev_norm

__all__ = [
    "DispersionParams",
    "EvolutionConfig",
    "FrequencyGrid",
    "ResonantRegimeError",
    "SpectralField",
    "Trajectory",
    "evolve",
    "free_evolution",
    "make_grid",
    "phase",
    "resonance",
    "sobolev_norm",
]
