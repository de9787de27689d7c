"""Exception hierarchy shared by all ivkit modules.

``ValidationError`` covers malformed inputs (files, shapes, roles) and maps
to CLI exit code 2.  ``EstimationError`` and its subclasses cover degenerate
estimation problems (rank deficiency, irrelevant instruments) and map to
CLI exit code 3.
"""

from __future__ import annotations


class IvKitError(Exception):
    """Base class for all ivkit exceptions."""


class ValidationError(IvKitError):
    """Invalid input data, file, or configuration."""


class EstimationError(IvKitError):
    """The estimation problem is degenerate and no estimate is produced."""


class RankDeficientError(EstimationError):
    """Design matrix does not have full column rank."""

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class InstrumentIrrelevanceError(EstimationError):
    """Instrument carries no sample information about the treatment.

    Carries the offending denominator so callers can report it.
    """

    def __init__(self, message: str, denominator: float):
        super().__init__(message)
        self.denominator = denominator


class MonotonicityError(EstimationError):
    """Estimated treatment uptake is not higher in the encouraged arm."""


class UndefinedBoundError(EstimationError):
    """A bound formula requires a conditional mean of an empty cell."""


class EstimationWarning(UserWarning):
    """Non-fatal numerical concern raised during estimation."""
