"""
Error hierarchy for pareto-risk.

Every error carries the process exit code the command-line interface reports
for it, so library callers and the CLI agree on what kind of failure occurred.
"""

from typing import Any, Dict, Optional


class ParetoRiskError(Exception):
    """Base error for the package."""

    exit_code: int = 1


class ConfigError(ParetoRiskError):
    """Run configuration is inconsistent or incomplete."""

    exit_code = 2


# --- Input errors ---


class InputError(ParetoRiskError):
    """Input data could not be turned into a usable container."""

    exit_code = 3


class InputFileNotFoundError(InputError, FileNotFoundError):
    """The input path does not exist or is not a file."""


class DataParseError(InputError):
    """A delimited file could not be parsed."""


class InvalidRecordError(DataParseError):
    """A single record is malformed or out of domain."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyDataError(InputError):
    """Parsing succeeded but produced no observations."""


class InvalidInputError(ParetoRiskError, ValueError):
    """Arguments violate the contract of an operation."""

    exit_code = 3


class InvalidParameterError(InvalidInputError):
    """Model parameters violate the model's invariants."""


# --- Output errors ---


class OutputWriteError(ParetoRiskError, OSError):
    """A result file could not be written to the output directory."""

    exit_code = 3


# --- Fit errors ---


class FitError(ParetoRiskError):
    """A tail fit could not be produced."""

    exit_code = 4

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InsufficientDataError(FitError):
    """Too few observations above the threshold for the requested method."""


class DegenerateDataError(FitError):
    """Exceedances admit no interior likelihood maximum."""


# --- Numerical errors ---


class NumericalError(ParetoRiskError):
    """A numerical kernel failed or the request is outside the numeric domain."""

    exit_code = 5


class ConvergenceError(NumericalError):
    """An iterative kernel stopped before meeting its tolerance."""

    def __init__(self, message: str, best_estimate: Optional[float] = None):
        super().__init__(message)
        self.best_estimate = best_estimate


class BracketError(NumericalError):
    """The supplied interval does not bracket a sign change."""


class OptimizationError(NumericalError):
    """The objective was non-finite along the whole search."""


class InfiniteMeanError(NumericalError):
    """A mean-based quantity was requested for a tail index at or below one."""


class ExtrapolationDomainError(NumericalError):
    """The requested probability or level lies outside the fitted tail."""


class SubThresholdError(ExtrapolationDomainError):
    """The requested return period or level falls below the threshold."""
