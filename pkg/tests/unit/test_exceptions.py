"""
Tests for exception classes and their exit codes.
"""
import pytest

from src.core.exceptions import (
    StcException, InputError, DimensionError, RangeError, ConfigError,
    NumericalError, NoUniqueSolutionError, DesignError, DegenerateIntervalError,
    FeasibilityError, GridTooCoarseError, BoundViolationError,
    OutputError, MissingInputsError
)


class TestExceptions:
    """Tests for custom exceptions."""

    def test_base_defaults(self):
        """Test StcException with defaults."""
        exc = StcException(message="Test error")

        assert exc.message == "Test error"
        assert exc.exit_code == 1
        assert exc.error_code == "STC_ERROR"
        assert exc.details == {}

    def test_base_custom(self):
        """Test StcException with custom values."""
        exc = StcException(
            message="Custom error",
            error_code="CUSTOM_ERROR",
            exit_code=7,
            details={"field": "value"}
        )

        assert exc.exit_code == 7
        assert exc.error_code == "CUSTOM_ERROR"
        assert exc.details == {"field": "value"}
        assert str(exc) == "Custom error"

    def test_range_error(self):
        """Test RangeError message and details."""
        exc = RangeError(12, 10)

        assert exc.exit_code == 2
        assert exc.error_code == "RANGE_ERROR"
        assert "[0, 9]" in exc.message
        assert exc.details == {"index": 12, "count": 10}

    def test_config_error_line(self):
        """Test ConfigError prefixes the line number."""
        exc = ConfigError("run.alpha: must exceed 1", line=4)

        assert exc.line == 4
        assert exc.message.startswith("line 4: ")
        assert exc.exit_code == 2

    def test_config_error_without_line(self):
        """Test ConfigError without a location."""
        exc = ConfigError("no sweep section")

        assert exc.line is None
        assert exc.message == "no sweep section"

    def test_missing_inputs(self):
        """Test MissingInputsError lists every file."""
        exc = MissingInputsError(["records.csv", "sweep.csv"])

        assert exc.exit_code == 4
        assert exc.message == "Missing inputs: records.csv, sweep.csv"
        assert exc.details["missing"] == ["records.csv", "sweep.csv"]


class TestExitCodes:
    """Every concrete error maps to its family's exit code."""

    @pytest.mark.parametrize("exc,code,error_code", [
        (InputError(), 2, "INPUT_ERROR"),
        (DimensionError(), 2, "DIMENSION_ERROR"),
        (NumericalError(), 3, "NUMERICAL_ERROR"),
        (NoUniqueSolutionError(), 3, "NO_UNIQUE_SOLUTION"),
        (DesignError(), 3, "DESIGN_ERROR"),
        (DegenerateIntervalError(), 3, "DEGENERATE_INTERVAL"),
        (FeasibilityError(), 3, "INFEASIBLE"),
        (GridTooCoarseError(), 3, "GRID_TOO_COARSE"),
        (BoundViolationError(), 3, "BOUND_VIOLATION"),
        (OutputError(), 4, "IO_ERROR"),
    ])
    def test_codes(self, exc, code, error_code):
        assert exc.exit_code == code
        assert exc.error_code == error_code
        assert isinstance(exc, StcException)

    def test_hierarchy(self):
        assert issubclass(DimensionError, InputError)
        assert issubclass(ConfigError, InputError)
        assert issubclass(GridTooCoarseError, NumericalError)
        assert issubclass(MissingInputsError, OutputError)
