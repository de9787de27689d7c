"""Lightweight result container shared by estimators and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .errors import ValidationError

ESTIMANDS = frozenset(
    {
        "ols_slope",
        "itt_outcome",
        "itt_treatment",
        "iv",
        "ils",
        "tsls",
        "liml",
        "late",
        "wald",
    }
)


@dataclass(frozen=True)
class EstimateReport:
    """A point estimate with its standard error and identifying metadata.

    ``estimand`` names what is being estimated (one of ``ESTIMANDS``),
    ``std_error`` may be None when no sampling variance is available, and
    ``details`` carries estimator-specific extras such as the k-class kappa.
    """

    estimand: str
    point: float
    std_error: float | None
    n_used: int
    details: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.estimand not in ESTIMANDS:
            raise ValidationError(f"unknown estimand {self.estimand!r}")
        if self.std_error is not None and not self.std_error >= 0.0:
            raise ValidationError("std_error must be nonnegative")
        if self.n_used < 1:
            raise ValidationError("n_used must be positive")
        object.__setattr__(self, "details", MappingProxyType(dict(self.details)))

    def to_json_dict(self) -> dict:
        out = {
            "estimand": self.estimand,
            "point": self.point,
            "std_error": self.std_error,
            "n": self.n_used,
        }
        out.update(self.details)
        return out
