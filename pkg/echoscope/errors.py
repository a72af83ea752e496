"""
errors.py

Exception hierarchy for echoscope. Every error the package raises itself
derives from ``EchoscopeError``; input and configuration problems also derive
from ``ValueError`` so callers can treat them as bad input.
"""

from __future__ import annotations


class EchoscopeError(Exception):
    """Root of all echoscope errors."""


class ValidationError(EchoscopeError, ValueError):
    """Bad input or configuration, detected before any computation."""


class RecordParseError(ValidationError):
    """A record line is not valid JSON."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SchemaError(ValidationError):
    """A record is valid JSON but misses or mistypes a field."""


class ConfigurationError(ValidationError):
    """Invalid run configuration or an impossible request."""


class RegistryError(ValidationError):
    """Invalid party registry content."""

    def __init__(self, message: str, row_number: int | None = None) -> None:
        self.row_number = row_number
        if row_number is not None:
            message = f"row {row_number}: {message}"
        super().__init__(message)


class InvalidPairError(ValidationError):
    """A party pair that cannot be analysed (same seed, different countries)."""


class SpecError(ValidationError):
    """An infeasible planted-network specification."""


class MalformedPairError(EchoscopeError):
    """A PairNetwork that violates its own invariants."""


class UndefinedMetricError(EchoscopeError):
    """A ratio metric whose denominator is zero."""


class ZeroVarianceError(EchoscopeError):
    """A column that cannot be standardized."""

    def __init__(self, column: str) -> None:
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class RankError(EchoscopeError):
    """A rank-deficient design matrix."""

    def __init__(self, columns: list[str]) -> None:
        self.columns = columns
        super().__init__(f"design matrix is rank deficient; collinear: {columns}")


class GroupingError(EchoscopeError):
    """Not enough groups or observations to fit a random-intercept model."""


class LayoutError(EchoscopeError):
    """Layout or rendering request that cannot be satisfied."""


class ConvergenceError(EchoscopeError):
    """A statistic that needs a converged fit was asked of one that did not converge."""
