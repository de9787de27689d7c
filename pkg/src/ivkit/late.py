"""Potential-outcomes analysis of a binary instrument/treatment/outcome table.

Everything here consumes a :class:`~ivkit.datasets.BinaryIVTable`:
compliance-type shares, the local average treatment effect with a
delta-method standard error, the defier-weighted representation of the IV
estimand, the four testable inequalities implied by exclusion plus
monotonicity, and the natural bounds on the average treatment effect.

Standard errors treat the two instrument arms as independent binomial
samples, which matches a randomized instrument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .datasets import BinaryIVTable
from .errors import MonotonicityError, UndefinedBoundError, ValidationError
from .intervals import Interval, IntervalSet
from .reports import EstimateReport

__all__ = [
    "ComplianceShares",
    "InequalityRecord",
    "InequalityReport",
    "compliance_shares",
    "late",
    "late_with_defiers",
    "exclusion_tests",
    "natural_bounds",
]


@dataclass(frozen=True)
class ComplianceShares:
    """Estimated shares of always-takers, never-takers and compliers.

    ``pi_c`` is defined as the remainder ``1 - pi_a - pi_n``; when it is
    negative the data contradict monotonicity and
    ``monotonicity_violated`` is set instead of raising.
    """

    pi_a: float
    pi_n: float
    pi_c: float
    pi_a_se: float
    pi_n_se: float
    pi_c_se: float
    monotonicity_violated: bool


def compliance_shares(table: BinaryIVTable) -> ComplianceShares:
    """Estimate compliance-type shares from the count table.

    pi_a = P(X=1 | Z=0), pi_n = P(X=0 | Z=1), pi_c = 1 - pi_a - pi_n.
    """
    pi_a = table.p_treatment(0)
    pi_n = 1.0 - table.p_treatment(1)
    pi_c = 1.0 - pi_a - pi_n
    var_a = pi_a * (1.0 - pi_a) / table.n_z0
    var_n = pi_n * (1.0 - pi_n) / table.n_z1
    return ComplianceShares(
        pi_a=pi_a,
        pi_n=pi_n,
        pi_c=pi_c,
        pi_a_se=math.sqrt(var_a),
        pi_n_se=math.sqrt(var_n),
        pi_c_se=math.sqrt(var_a + var_n),
        monotonicity_violated=pi_c < 0.0,
    )


def _itt_covariance(table: BinaryIVTable) -> float:
    """Cov of the two ITT estimates from the within-arm multinomial draws."""
    total = 0.0
    for z in (0, 1):
        p_y = table.p_outcome(z)
        p_x = table.p_treatment(z)
        p_yx = table.p_joint(1, 1, z)
        total += (p_yx - p_y * p_x) / table.arm_size(z)
    return total


def late(table: BinaryIVTable) -> EstimateReport:
    """Local average treatment effect, the ratio of the two ITT effects.

    point = ITT_Y / ITT_X with ITT_Y = P(Y=1|Z=1) - P(Y=1|Z=0) and
    ITT_X = P(X=1|Z=1) - P(X=1|Z=0).  The standard error is the delta
    method for a ratio, using binomial arm variances and the within-arm
    covariance between the outcome and treatment frequencies.

    Raises
    ------
    MonotonicityError
        If ITT_X <= 0: the complier share is not positive, so the estimand
        is undefined (monotonicity violation or irrelevant instrument).
    """
    itt_y = table.p_outcome(1) - table.p_outcome(0)
    itt_x = table.p_treatment(1) - table.p_treatment(0)
    if itt_x <= 0.0:
        raise MonotonicityError(
            f"treatment uptake does not increase with encouragement (ITT_X = {itt_x:.6g})"
        )
    point = itt_y / itt_x

    var_y = sum(
        table.p_outcome(z) * (1.0 - table.p_outcome(z)) / table.arm_size(z) for z in (0, 1)
    )
    var_x = sum(
        table.p_treatment(z) * (1.0 - table.p_treatment(z)) / table.arm_size(z)
        for z in (0, 1)
    )
    cov_yx = _itt_covariance(table)
    variance = (
        var_y / itt_x**2
        + itt_y**2 * var_x / itt_x**4
        - 2.0 * itt_y * cov_yx / itt_x**3
    )
    return EstimateReport(
        estimand="late",
        point=point,
        std_error=math.sqrt(max(variance, 0.0)),
        n_used=table.total,
        details={"itt_y": itt_y, "itt_x": itt_x},
    )


def late_with_defiers(pi_c: float, pi_d: float, effect_c: float, effect_d: float) -> float:
    """IV estimand when defiers exist: a signed-weight combination.

    Returns ``pi_c/(pi_c - pi_d) * effect_c - pi_d/(pi_c - pi_d) * effect_d``,
    the quantity the covariance ratio converges to under random assignment
    and exclusion but without monotonicity.
    """
    for name, share in (("pi_c", pi_c), ("pi_d", pi_d)):
        if not 0.0 <= share <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {share}")
    if pi_c + pi_d > 1.0 + 1e-12:
        raise ValidationError("pi_c + pi_d must not exceed 1")
    denom = pi_c - pi_d
    if denom == 0.0:
        raise ValidationError(
            "complier and defier shares are equal; the IV estimand is undefined"
        )
    return (pi_c * effect_c - pi_d * effect_d) / denom


@dataclass(frozen=True)
class InequalityRecord:
    """One testable restriction P(Y=y, X=x | Z=z) <= P(Y=y, X=x | Z=z')."""

    outcome: int
    treatment_arm: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def violated(self) -> bool:
        return self.slack < 0.0

    @property
    def label(self) -> str:
        kind = "always_taker" if self.treatment_arm == 1 else "never_taker"
        return f"{kind}_y{self.outcome}"


@dataclass(frozen=True)
class InequalityReport:
    records: tuple[InequalityRecord, ...]

    @property
    def any_violated(self) -> bool:
        return any(r.violated for r in self.records)

    def record(self, outcome: int, treatment_arm: int) -> InequalityRecord:
        for r in self.records:
            if r.outcome == outcome and r.treatment_arm == treatment_arm:
                return r
        raise KeyError((outcome, treatment_arm))


def exclusion_tests(table: BinaryIVTable) -> InequalityReport:
    """The four joint-frequency inequalities implied by the IV assumptions.

    For y in {0, 1}:

    * never-taker side: P(Y=y, X=0 | Z=1) <= P(Y=y, X=0 | Z=0)
    * always-taker side: P(Y=y, X=1 | Z=0) <= P(Y=y, X=1 | Z=1)

    Each record reports lhs, rhs and the slack rhs - lhs; a negative slack
    flags a violation.  Only point estimates are reported, no p-values.
    """
    records = []
    for y in (0, 1):
        records.append(
            InequalityRecord(
                outcome=y,
                treatment_arm=0,
                lhs=table.p_joint(y, 0, 1),
                rhs=table.p_joint(y, 0, 0),
            )
        )
        records.append(
            InequalityRecord(
                outcome=y,
                treatment_arm=1,
                lhs=table.p_joint(y, 1, 0),
                rhs=table.p_joint(y, 1, 1),
            )
        )
    return InequalityReport(records=tuple(records))


def _mean_or_zero(table: BinaryIVTable, x: int, z: int, coefficient: float) -> float:
    """Conditional outcome mean, continuously extended at empty cells.

    A 0/0 conditional mean multiplied by a zero coefficient contributes 0;
    an empty cell with a nonzero coefficient has no defensible value.
    """
    if table.cell_size(x, z) == 0:
        if coefficient == 0.0:
            return 0.0
        raise UndefinedBoundError(
            f"conditioning cell (X={x}, Z={z}) is empty but its weight is {coefficient:.6g}"
        )
    return table.p_outcome_in_cell(x, z)


def natural_bounds(table: BinaryIVTable) -> IntervalSet:
    """Sharp bounds on E[Y(1) - Y(0)] for a binary outcome.

    Uses only random assignment, exclusion and monotonicity.  The width of
    the interval is exactly 1 - pi_c: the effect is point-identified only
    under perfect compliance.
    """
    share_n = 1.0 - table.p_treatment(1)  # weight on the (X=0, Z=1) cell
    share_a = table.p_treatment(0)  # weight on the (X=1, Z=0) cell
    itt_y = table.p_outcome(1) - table.p_outcome(0)
    mean_n = _mean_or_zero(table, x=0, z=1, coefficient=share_n)
    mean_a = _mean_or_zero(table, x=1, z=0, coefficient=share_a)

    lower = -share_n * mean_n + itt_y + share_a * (mean_a - 1.0)
    upper = share_n * (1.0 - mean_n) + itt_y + share_a * mean_a
    return IntervalSet((Interval(lower, upper),))
