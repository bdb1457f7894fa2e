"""Very weak solutions of wave equations with irregular, degenerate coefficients."""

from .coefficients import CoefficientField, RegularizedNet, glaeser_check, regularize
from .errors import (CFLError, ConfigurationError, ConstructionError, DivergenceError, DomainError,
                     FitError, GlaeserViolation, ResolutionError, UnsupportedDistributionError,
                     UnsupportedLevelError, VerificationError, VWWaveError)
from .grid import Grid
from .mollifier import Mollifier, PositiveScale, build_bump, build_vanishing_moments, default_ladder
from .solver import solve, solve_ladder
from .system import build_system, derive_system, verify_energy_identities, verify_symmetriser

__version__ = "0.1.0"

__all__ = [
    "CFLError", "CoefficientField", "ConfigurationError", "ConstructionError", "DivergenceError",
    "DomainError", "FitError", "GlaeserViolation", "Grid", "Mollifier", "PositiveScale",
    "RegularizedNet", "ResolutionError", "UnsupportedDistributionError", "UnsupportedLevelError",
    "VWWaveError", "VerificationError", "build_bump", "build_system", "build_vanishing_moments",
    "default_ladder", "derive_system", "glaeser_check", "regularize", "solve", "solve_ladder",
    "verify_energy_identities", "verify_symmetriser",
]
