"""Weak-instrument-robust inference and Monte Carlo study harness.

The Anderson-Rubin statistic for a candidate structural slope b is

    AR(b) = (N^{-1/2} sum_i (z_i - zbar)(y_i - b x_i))^2
            / (N^{-1} sum_i (z_i - zbar)^2 * s2(b)),

where s2(b) is the demeaned sample variance of y - b x with divisor N.
At the true slope AR is asymptotically chi-squared with one degree of
freedom regardless of instrument strength, so the set {b : AR(b) <= 3.84}
is a 95% confidence set that stays valid when instruments are weak.  With
this s2 choice AR is a ratio of quadratics in b and the set boundary
solves a quadratic equation exactly; the result can be a bounded interval,
two rays, the whole line, or empty.

``run_weak_iv_study`` simulates the linear IV model and reports median
bias, coverage and rejection rates for OLS, TSLS, LIML and the AR test.
Replication r draws its generator from ``SeedSequence(master_seed,
spawn_key=(r,))``, so results are bit-identical no matter how or in what
order the replications are executed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.stats

from .datasets import Dataset
from .errors import EstimationError, ValidationError
from .intervals import Interval, IntervalSet
from .kclass import liml, tsls
from .market import read_key_value_file
from .ols import ols
from .validation import readonly

__all__ = [
    "ArCurve",
    "McConfig",
    "McReport",
    "ar_statistic",
    "ar_curve",
    "ar_confidence_set",
    "run_weak_iv_study",
    "DEFAULT_CRITICAL_VALUE",
]

DEFAULT_CRITICAL_VALUE = 3.84

_GRID_HALF_WIDTH_SCALES = 50.0
_GRID_POINTS = 10_001
_BISECT_TOL = 1e-8


def _ar_moments(dataset: Dataset) -> tuple[float, ...]:
    """Centered second moments (1/N convention) of (y, x, z)."""
    if dataset.n_instruments != 1 or dataset.n_covariates != 0:
        raise ValidationError(
            "the AR statistic is implemented for one instrument and no covariates"
        )
    if dataset.n < 3:
        raise ValidationError("need at least 3 observations")
    y = dataset.outcome - dataset.outcome.mean()
    x = dataset.treatment - dataset.treatment.mean()
    z = dataset.instruments[:, 0]
    z = z - z.mean()
    n = dataset.n
    return (
        float(y @ y) / n,
        float(x @ x) / n,
        float(z @ z) / n,
        float(x @ y) / n,
        float(z @ y) / n,
        float(z @ x) / n,
    )


def ar_statistic(dataset: Dataset, b: float) -> float:
    """Evaluate AR(b) for a single instrument and no covariates.

    When the residual y - b x is constant the statistic is defined as 0 by
    continuous extension (the numerator vanishes as well); a zero residual
    variance with a nonzero numerator is an error.
    """
    c_yy, c_xx, c_zz, c_xy, c_zy, c_zx = _ar_moments(dataset)
    n = dataset.n
    numerator = c_zy - b * c_zx
    s2 = c_yy - 2.0 * b * c_xy + b * b * c_xx
    scale = max(c_yy, b * b * c_xx, np.finfo(float).tiny)
    if s2 <= 1e-14 * scale:
        if numerator * numerator <= 1e-14 * scale * c_zz:
            return 0.0
        raise EstimationError(
            f"residual variance at b={b!r} is zero but the instrument covariance is not"
        )
    return n * numerator * numerator / (c_zz * s2)


@dataclass(frozen=True)
class ArCurve:
    """AR(b) evaluated over a grid of candidate slopes."""

    grid: np.ndarray
    values: np.ndarray
    critical_value: float = DEFAULT_CRITICAL_VALUE

    def __post_init__(self):
        object.__setattr__(self, "grid", readonly(np.asarray(self.grid, float)))
        object.__setattr__(self, "values", readonly(np.asarray(self.values, float)))
        if self.grid.shape != self.values.shape:
            raise ValidationError("grid and values must have matching shapes")


def _default_grid(dataset: Dataset) -> np.ndarray:
    c_yy, c_xx, _, _, c_zy, c_zx = _ar_moments(dataset)
    center = c_zy / c_zx if c_zx != 0.0 else 0.0
    scale = math.sqrt(c_yy / c_xx) if c_xx > 0.0 else 1.0
    scale = max(scale, 1e-12)
    half = _GRID_HALF_WIDTH_SCALES * scale
    return np.linspace(center - half, center + half, _GRID_POINTS)


def _ar_values(dataset: Dataset, grid: np.ndarray) -> np.ndarray:
    c_yy, c_xx, c_zz, c_xy, c_zy, c_zx = _ar_moments(dataset)
    n = dataset.n
    numerator = c_zy - grid * c_zx
    s2 = c_yy - 2.0 * grid * c_xy + grid * grid * c_xx
    with np.errstate(divide="ignore", invalid="ignore"):
        values = n * numerator * numerator / (c_zz * s2)
    return np.where(s2 > 0.0, values, np.inf)


def ar_curve(dataset: Dataset, grid=None, critical_value: float = DEFAULT_CRITICAL_VALUE) -> ArCurve:
    """Tabulate AR(b) over a grid (default: robust center +/- 50 scales)."""
    grid = _default_grid(dataset) if grid is None else np.asarray(grid, float)
    return ArCurve(grid=grid, values=_ar_values(dataset, grid), critical_value=critical_value)


def _analytic_set(dataset: Dataset, critical_value: float) -> IntervalSet:
    """Solve AR(b) <= critical_value as a quadratic inequality in b."""
    c_yy, c_xx, c_zz, c_xy, c_zy, c_zx = _ar_moments(dataset)
    n = dataset.n
    qa = n * c_zx * c_zx - critical_value * c_zz * c_xx
    qb = -2.0 * n * c_zy * c_zx + 2.0 * critical_value * c_zz * c_xy
    qc = n * c_zy * c_zy - critical_value * c_zz * c_yy

    if qa == 0.0:
        if qb == 0.0:
            return IntervalSet.whole_line() if qc <= 0.0 else IntervalSet.empty()
        root = -qc / qb
        if qb > 0.0:
            return IntervalSet((Interval(-math.inf, root),))
        return IntervalSet((Interval(root, math.inf),))

    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return IntervalSet.empty() if qa > 0.0 else IntervalSet.whole_line()
    sqrt_disc = math.sqrt(disc)
    # Numerically stable quadratic roots.
    q = -(qb + math.copysign(sqrt_disc, qb)) / 2.0
    if q != 0.0:
        roots = sorted((q / qa, qc / q))
    else:
        roots = sorted(((-qb + sqrt_disc) / (2.0 * qa), (-qb - sqrt_disc) / (2.0 * qa)))
    low, high = roots
    if qa > 0.0:
        return IntervalSet((Interval(low, high),))
    if low == high:
        return IntervalSet.whole_line()
    return IntervalSet((Interval(-math.inf, low), Interval(high, math.inf)))


def _bisect_boundary(dataset, critical_value, lo, hi, inside_lo):
    """Refine the set boundary between grid points lo < hi to 1e-8."""
    def inside(b):
        return _ar_values(dataset, np.array([b]))[0] <= critical_value

    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if inside(mid) == inside_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _grid_set(dataset: Dataset, critical_value: float) -> IntervalSet:
    grid = _default_grid(dataset)
    inside = _ar_values(dataset, grid) <= critical_value
    if not inside.any():
        return IntervalSet.empty()

    intervals = []
    idx = 0
    m = len(grid)
    while idx < m:
        if not inside[idx]:
            idx += 1
            continue
        start = idx
        while idx + 1 < m and inside[idx + 1]:
            idx += 1
        end = idx
        if start == 0:
            lower = -math.inf
        else:
            lower = _bisect_boundary(
                dataset, critical_value, grid[start - 1], grid[start], inside_lo=False
            )
        if end == m - 1:
            upper = math.inf
        else:
            upper = _bisect_boundary(
                dataset, critical_value, grid[end], grid[end + 1], inside_lo=True
            )
        intervals.append(Interval(lower, upper))
        idx += 1
    return IntervalSet(tuple(intervals))


def ar_confidence_set(
    dataset: Dataset,
    critical_value: float = DEFAULT_CRITICAL_VALUE,
    method: str = "analytic",
) -> IntervalSet:
    """Invert the AR test: the set of slopes b with AR(b) <= critical_value.

    ``method="analytic"`` solves the quadratic boundary condition exactly
    and is the default; ``method="grid"`` scans a wide grid and refines the
    boundaries by bisection (it cannot see set pieces beyond the grid).
    """
    if not critical_value >= 0.0:
        raise ValidationError("critical_value must be nonnegative")
    if math.isinf(critical_value):
        return IntervalSet.whole_line()
    _ar_moments(dataset)  # validates shape preconditions
    if method == "analytic":
        return _analytic_set(dataset, critical_value)
    if method == "grid":
        return _grid_set(dataset, critical_value)
    raise ValidationError(f"unknown method {method!r}")


@dataclass(frozen=True)
class McConfig:
    """Design of a weak/many-instrument Monte Carlo study."""

    n: int
    k_instruments: int
    beta1_true: float
    instrument_strength: float
    endogeneity: float
    replications: int
    master_seed: int

    def __post_init__(self):
        if self.k_instruments < 1:
            raise ValidationError("k_instruments must be at least 1")
        if self.n < self.k_instruments + 3:
            raise ValidationError("n must exceed k_instruments + 2")
        if not -1.0 < self.endogeneity < 1.0:
            raise ValidationError("endogeneity must lie strictly inside (-1, 1)")
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "McConfig":
        fields = {
            "n": int,
            "k_instruments": int,
            "beta1_true": float,
            "instrument_strength": float,
            "endogeneity": float,
            "replications": int,
            "master_seed": int,
        }
        unknown = set(values) - set(fields)
        if unknown:
            raise ValidationError(f"unknown study parameter(s) {sorted(unknown)}")
        missing = set(fields) - set(values)
        if missing:
            raise ValidationError(f"missing study parameter(s) {sorted(missing)}")
        parsed = {}
        for key, cast in fields.items():
            try:
                parsed[key] = cast(values[key])
            except ValueError:
                raise ValidationError(f"cannot parse {key} from {values[key]!r}") from None
        return cls(**parsed)

    @classmethod
    def from_file(cls, path) -> "McConfig":
        return cls.from_mapping(read_key_value_file(path))

    def to_mapping(self) -> dict:
        return {
            "n": self.n,
            "k_instruments": self.k_instruments,
            "beta1_true": self.beta1_true,
            "instrument_strength": self.instrument_strength,
            "endogeneity": self.endogeneity,
            "replications": self.replications,
            "master_seed": self.master_seed,
        }

    def to_file(self, path) -> None:
        lines = [f"{key} = {value!r}" for key, value in self.to_mapping().items()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class McReport:
    """Per-estimator Monte Carlo summaries.

    ``estimators`` maps ols/tsls/liml to median bias, coverage of the
    conventional 95% interval, and the 5% rejection rate at the true slope;
    ``ar`` holds coverage and rejection of the AR test.
    """

    config: McConfig
    estimators: Mapping[str, Mapping[str, float]]
    ar: Mapping[str, float]
    per_replication: Mapping[str, np.ndarray] | None = None

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_mapping(),
            "estimators": {
                name: dict(stats) for name, stats in sorted(self.estimators.items())
            },
            "ar": dict(self.ar),
        }


def _ar_statistic_general(y, x, z_matrix, b: float) -> float:
    """AR with k instruments: projection quadratic form over s2(b), chi2(k)."""
    u = y - b * x
    u = u - u.mean()
    z = z_matrix - z_matrix.mean(axis=0)
    coef, _, _, _ = np.linalg.lstsq(z, u, rcond=None)
    projected = z @ coef
    s2 = float(u @ u) / u.shape[0]
    if s2 <= 0.0:
        return 0.0
    return float(projected @ projected) / s2


def _replication_record(cfg: McConfig, r: int) -> dict[str, float]:
    """Simulate replication r and evaluate every estimator on it. Pure."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(r,)))
    z = rng.standard_normal((cfg.n, cfg.k_instruments))
    shock = rng.standard_normal((cfg.n, 2))
    u = shock[:, 0]
    v = cfg.endogeneity * shock[:, 0] + math.sqrt(1.0 - cfg.endogeneity**2) * shock[:, 1]
    x = z.sum(axis=1) * cfg.instrument_strength + v
    y = cfg.beta1_true * x + u

    record: dict[str, float] = {}
    ols_fit = ols(y, x[:, None])
    record["ols_point"] = float(ols_fit.coefficients[1])
    record["ols_se"] = float(ols_fit.std_errors[1])

    dataset = Dataset(outcome=y, treatment=x, instruments=z)
    for name, fitter in (("tsls", tsls), ("liml", liml)):
        fit = fitter(dataset)
        record[f"{name}_point"] = fit.beta1
        record[f"{name}_se"] = fit.se_beta1

    if cfg.k_instruments == 1:
        record["ar_stat"] = ar_statistic(dataset, cfg.beta1_true)
    else:
        record["ar_stat"] = _ar_statistic_general(y, x, z, cfg.beta1_true)
    return record


def _ar_critical_value(k_instruments: int) -> float:
    if k_instruments == 1:
        return DEFAULT_CRITICAL_VALUE
    return float(scipy.stats.chi2.ppf(0.95, df=k_instruments))


def run_weak_iv_study(cfg: McConfig, keep_replications: bool = False) -> McReport:
    """Run the Monte Carlo study described by ``cfg``.

    Each replication simulates y = beta1 x + u, x = strength * sum(z) + v
    with standard normal instruments and unit-variance shocks correlated at
    ``endogeneity`` (the first-stage coefficient is ``instrument_strength``
    on every instrument).  Deterministic given ``master_seed``; replication
    order and parallelism do not affect the result.
    """
    records = [_replication_record(cfg, r) for r in range(cfg.replications)]
    columns = {key: np.array([rec[key] for rec in records]) for key in records[0]}

    z_crit = 1.959963984540054  # standard normal 97.5% point
    estimators = {}
    for name in ("ols", "tsls", "liml"):
        points = columns[f"{name}_point"]
        ses = columns[f"{name}_se"]
        err = np.abs(points - cfg.beta1_true)
        covered = err <= z_crit * ses
        estimators[name] = {
            "median_bias": float(np.median(points) - cfg.beta1_true),
            "coverage": float(covered.mean()),
            "rejection_rate": float(1.0 - covered.mean()),
        }

    ar_crit = _ar_critical_value(cfg.k_instruments)
    ar_covered = columns["ar_stat"] <= ar_crit
    ar = {
        "coverage": float(ar_covered.mean()),
        "rejection_rate": float(1.0 - ar_covered.mean()),
        "critical_value": ar_crit,
    }
    per_replication = (
        {key: readonly(val) for key, val in columns.items()} if keep_replications else None
    )
    return McReport(config=cfg, estimators=estimators, ar=ar, per_replication=per_replication)
