"""
Custom exceptions for the toolkit.

Every exception carries a process exit code used by the CLI:
2 for input/config errors, 3 for numerical/design errors, 4 for I/O errors.
"""
from typing import Optional, Dict, Any, List


class StcException(Exception):
    """Base toolkit exception."""

    def __init__(
        self,
        message: str,
        error_code: str = "STC_ERROR",
        exit_code: int = 1,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class InputError(StcException):
    """Invalid argument or malformed input."""

    def __init__(
        self,
        message: str = "Invalid input",
        details: Optional[Dict[str, Any]] = None,
        error_code: str = "INPUT_ERROR"
    ):
        super().__init__(
            message=message,
            error_code=error_code,
            exit_code=2,
            details=details
        )


class DimensionError(InputError):
    """Matrix or vector shapes do not match."""

    def __init__(self, message: str = "Dimension mismatch", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="DIMENSION_ERROR")


class RangeError(InputError):
    """Index outside the valid range."""

    def __init__(self, index: int, count: int):
        super().__init__(
            message=f"Index {index} outside [0, {count - 1}]",
            details={"index": index, "count": count},
            error_code="RANGE_ERROR"
        )


class ConfigError(InputError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message: str = "Invalid configuration", line: Optional[int] = None,
                 details: Optional[Dict[str, Any]] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message=message, details=details, error_code="CONFIG_ERROR")


class NumericalError(StcException):
    """A numerical routine or design step failed."""

    def __init__(
        self,
        message: str = "Numerical error",
        details: Optional[Dict[str, Any]] = None,
        error_code: str = "NUMERICAL_ERROR"
    ):
        super().__init__(
            message=message,
            error_code=error_code,
            exit_code=3,
            details=details
        )


class NoUniqueSolutionError(NumericalError):
    """Lyapunov equation with a non-Hurwitz operator."""

    def __init__(self, message: str = "Lyapunov equation has no unique solution",
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="NO_UNIQUE_SOLUTION")


class DesignError(NumericalError):
    """Benchmark design failed (e.g. the pair (A, B) is not stabilizable)."""

    def __init__(self, message: str = "Benchmark design failed", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="DESIGN_ERROR")


class DegenerateIntervalError(NumericalError):
    """Constraint data requested on an empty interval."""

    def __init__(self, message: str = "Constraint data needs a positive interval",
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="DEGENERATE_INTERVAL")


class FeasibilityError(NumericalError):
    """The benchmark gain is not a strictly feasible starting point."""

    def __init__(self, message: str = "Gain problem has no strictly feasible point",
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="INFEASIBLE")


class GridTooCoarseError(NumericalError):
    """No positive dwell time was found on the grid, even for the benchmark gain."""

    def __init__(self, message: str = "Time grid too coarse for a positive dwell time",
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="GRID_TOO_COARSE")


class BoundViolationError(NumericalError):
    """A runtime check of the stability or performance guarantee failed."""

    def __init__(self, message: str = "Performance bound violated", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, details=details, error_code="BOUND_VIOLATION")


class OutputError(StcException):
    """Result files could not be read or written."""

    def __init__(
        self,
        message: str = "I/O error",
        details: Optional[Dict[str, Any]] = None,
        error_code: str = "IO_ERROR"
    ):
        super().__init__(
            message=message,
            error_code=error_code,
            exit_code=4,
            details=details
        )


class MissingInputsError(OutputError):
    """Required result files are absent."""

    def __init__(self, missing: List[str]):
        super().__init__(
            message="Missing inputs: " + ", ".join(missing),
            details={"missing": missing},
            error_code="MISSING_INPUTS"
        )
