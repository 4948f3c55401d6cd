"""Core package - exceptions and dense linear-algebra kernels."""
from src.core.exceptions import (
    StcException, InputError, DimensionError, RangeError, ConfigError,
    NumericalError, NoUniqueSolutionError, DesignError, DegenerateIntervalError,
    FeasibilityError, GridTooCoarseError, BoundViolationError,
    OutputError, MissingInputsError
)
from src.core.linalg import (
    SpectralInfo, as_matrix, symmetrize, expm, spectral,
    min_eigenvalue, max_eigenvalue, is_positive_definite,
    solve_lyapunov, solve_care, care_residual
)

__all__ = [
    # Exceptions
    "StcException", "InputError", "DimensionError", "RangeError", "ConfigError",
    "NumericalError", "NoUniqueSolutionError", "DesignError", "DegenerateIntervalError",
    "FeasibilityError", "GridTooCoarseError", "BoundViolationError",
    "OutputError", "MissingInputsError",
    # Linear algebra
    "SpectralInfo", "as_matrix", "symmetrize", "expm", "spectral",
    "min_eigenvalue", "max_eigenvalue", "is_positive_definite",
    "solve_lyapunov", "solve_care", "care_residual",
]
