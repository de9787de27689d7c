"""ivkit: instrumental-variables estimation, bounds, and simulation.

A library plus CLI for causal inference with instruments: the classical
estimator stack (covariance ratio, Wald, indirect least squares, two-stage
least squares, LIML), compliance-type analysis with partial-identification
bounds for binary data, weak-instrument-robust confidence sets, and a
supply/demand market simulator with a Monte Carlo harness for verifying
all of it.
"""

from .datasets import (
    BinaryIVTable,
    ColumnRoles,
    Dataset,
    expand_table,
    flu_table,
    load_csv,
    table_from_dataset,
    write_csv,
)
from .errors import (
    EstimationError,
    EstimationWarning,
    InstrumentIrrelevanceError,
    IvKitError,
    MonotonicityError,
    RankDeficientError,
    UndefinedBoundError,
    ValidationError,
)
from .intervals import Interval, IntervalSet
from .kclass import (
    GroupMeans,
    IvFit,
    KClassIV,
    ils,
    iv_ratio,
    liml,
    per_instrument_estimates,
    tsls,
    wald_from_means,
)
from .late import (
    ComplianceShares,
    InequalityRecord,
    InequalityReport,
    compliance_shares,
    exclusion_tests,
    late,
    late_with_defiers,
    natural_bounds,
)
from .market import (
    MarketDraw,
    MarketParams,
    TaxOutcome,
    ZLaw,
    equilibrium,
    simulate_markets,
    tax_counterfactual,
    working_slope,
)
from .ols import OLS, OlsFit, ols, reduced_forms
from .reports import ESTIMANDS, EstimateReport
from .weakiv import (
    ArCurve,
    McConfig,
    McReport,
    ar_confidence_set,
    ar_curve,
    ar_statistic,
    run_weak_iv_study,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # data
    "Dataset",
    "ColumnRoles",
    "BinaryIVTable",
    "load_csv",
    "write_csv",
    "flu_table",
    "table_from_dataset",
    "expand_table",
    # estimators
    "OLS",
    "OlsFit",
    "ols",
    "reduced_forms",
    "KClassIV",
    "IvFit",
    "GroupMeans",
    "iv_ratio",
    "wald_from_means",
    "tsls",
    "ils",
    "liml",
    "per_instrument_estimates",
    # binary-table analysis
    "ComplianceShares",
    "InequalityRecord",
    "InequalityReport",
    "compliance_shares",
    "late",
    "late_with_defiers",
    "exclusion_tests",
    "natural_bounds",
    # inference and simulation
    "ArCurve",
    "McConfig",
    "McReport",
    "ar_statistic",
    "ar_curve",
    "ar_confidence_set",
    "run_weak_iv_study",
    "MarketParams",
    "MarketDraw",
    "TaxOutcome",
    "ZLaw",
    "equilibrium",
    "simulate_markets",
    "working_slope",
    "tax_counterfactual",
    # shared containers
    "Interval",
    "IntervalSet",
    "EstimateReport",
    "ESTIMANDS",
    # errors
    "IvKitError",
    "ValidationError",
    "EstimationError",
    "RankDeficientError",
    "InstrumentIrrelevanceError",
    "MonotonicityError",
    "UndefinedBoundError",
    "EstimationWarning",
]
