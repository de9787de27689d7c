"""Instrumental-variables estimators for a single endogenous regressor.

The structural model is

    y_i = beta0 + beta1 * x_i + beta2' v_i + e_i,

with x endogenous and instruments z available.  Four routes to beta1 are
implemented: the covariance ratio (``iv_ratio``), the Wald estimator from
group means, indirect least squares (``ils``), two-stage least squares
(``tsls``) and limited-information maximum likelihood (``liml``) via its
k-class eigenvalue formulation.  In the just-identified case all of them
are numerically identical.

Standard errors are homoscedastic throughout:
``sigma2 * inv(D'D)`` with ``D = (1, fitted x, v)`` and ``sigma2`` computed
from structural residuals using the actual (not fitted) treatment, with an
n - p degrees-of-freedom correction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin

from .datasets import Dataset
from .errors import (
    EstimationWarning,
    InstrumentIrrelevanceError,
    RankDeficientError,
    ValidationError,
)
from .ols import _check_rank, _solve_qr, ols
from .reports import EstimateReport
from .validation import check_binary, readonly

__all__ = [
    "IvFit",
    "GroupMeans",
    "iv_ratio",
    "wald_from_means",
    "tsls",
    "ils",
    "liml",
    "per_instrument_estimates",
    "KClassIV",
]

IV_METHODS = ("iv_ratio", "ils", "tsls", "liml")

# Relevance guard: catches exact degeneracy only, weak instruments are the
# business of the inference tools, not of point estimation.
_IRRELEVANCE_TOL = 1e-12


@dataclass(frozen=True)
class IvFit:
    """A fitted instrumental-variables regression.

    ``std_errors`` is aligned with the coefficient order
    (beta0, beta1, beta2...).  ``kappa`` is the k-class parameter: 1 for the
    two-stage / ratio estimators, the smallest eigenvalue of the variance
    ratio problem for LIML.
    """

    beta1: float
    beta0: float
    beta2: np.ndarray
    std_errors: np.ndarray
    kappa: float
    method: str
    n: int

    def __post_init__(self):
        if self.method not in IV_METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not self.kappa >= 1.0 - 1e-10:
            raise ValidationError(f"kappa must be >= 1, got {self.kappa}")
        object.__setattr__(self, "beta2", readonly(np.asarray(self.beta2, float)))
        object.__setattr__(self, "std_errors", readonly(np.asarray(self.std_errors, float)))

    @property
    def se_beta0(self) -> float:
        return float(self.std_errors[0])

    @property
    def se_beta1(self) -> float:
        return float(self.std_errors[1])

    def to_report(self) -> EstimateReport:
        estimand = "iv" if self.method == "iv_ratio" else self.method
        return EstimateReport(
            estimand=estimand,
            point=self.beta1,
            std_error=self.se_beta1,
            n_used=self.n,
            details={"kappa": self.kappa},
        )


@dataclass(frozen=True)
class GroupMeans:
    """Arm-wise means of outcome and treatment for a binary instrument."""

    mean_y_by_arm: tuple[float, float]
    mean_x_by_arm: tuple[float, float]
    arm_sizes: tuple[int, int]

    def __post_init__(self):
        if min(self.arm_sizes) < 1:
            raise ValidationError("both instrument arms must be non-empty")

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "GroupMeans":
        if dataset.n_instruments != 1:
            raise ValidationError("group means need a single instrument column")
        z = dataset.instruments[:, 0]
        check_binary(z, "instrument")
        in_arm1 = z == 1.0
        n1 = int(in_arm1.sum())
        n0 = dataset.n - n1
        if n0 == 0 or n1 == 0:
            raise ValidationError("both instrument arms must be non-empty")
        y, x = dataset.outcome, dataset.treatment
        return cls(
            mean_y_by_arm=(float(y[~in_arm1].mean()), float(y[in_arm1].mean())),
            mean_x_by_arm=(float(x[~in_arm1].mean()), float(x[in_arm1].mean())),
            arm_sizes=(n0, n1),
        )


def wald_from_means(means: GroupMeans) -> float:
    """Ratio of arm-mean differences, (y1 - y0) / (x1 - x0)."""
    y0, y1 = means.mean_y_by_arm
    x0, x1 = means.mean_x_by_arm
    denom = x1 - x0
    if denom == 0.0:
        raise InstrumentIrrelevanceError(
            "treatment means are identical across instrument arms", denominator=0.0
        )
    if y1 == y0:
        return 0.0
    return (y1 - y0) / denom


def _designs(dataset: Dataset) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Exogenous design (1, V) and full design (1, Z, V) with column names."""
    ones = np.ones((dataset.n, 1))
    exog = np.hstack([ones, dataset.covariates])
    full = np.hstack([ones, dataset.instruments, dataset.covariates])
    names = ["const", *dataset.instrument_names, *dataset.covariate_names]
    return exog, full, names


def _residualize(target: np.ndarray, design: np.ndarray) -> np.ndarray:
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    return target - design @ coef


def _check_relevance(dataset: Dataset, first_stage_coef: np.ndarray) -> None:
    k = dataset.n_instruments
    pi_z = first_stage_coef[1 : 1 + k]
    sd_z = dataset.instruments.std(axis=0)
    sd_x = dataset.treatment.std()
    if np.all(np.abs(pi_z) * sd_z <= _IRRELEVANCE_TOL * max(sd_x, np.finfo(float).tiny)):
        raise InstrumentIrrelevanceError(
            "instruments carry no sample information about the treatment",
            denominator=float(np.abs(pi_z).max(initial=0.0)),
        )


def _liml_kappa(dataset: Dataset, exog: np.ndarray, full: np.ndarray) -> float:
    """Smallest root kappa of det(W'M_V W - kappa W'M_ZV W) = 0, W = (y, x)."""
    w = np.column_stack([dataset.outcome, dataset.treatment])
    resid_v = w - exog @ np.linalg.lstsq(exog, w, rcond=None)[0]
    resid_zv = w - full @ np.linalg.lstsq(full, w, rcond=None)[0]
    a = resid_v.T @ resid_v
    b = resid_zv.T @ resid_zv
    try:
        roots = scipy.linalg.eigh(a, b, eigvals_only=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        values = scipy.linalg.eig(a, b, right=False)
        finite = values[np.isfinite(values)].real
        if finite.size == 0:
            raise RankDeficientError("variance-ratio eigenvalue problem is degenerate")
        roots = np.sort(finite)
    if len(roots) == 2 and abs(roots[1] - roots[0]) <= 1e-10 * max(abs(roots[1]), 1.0):
        warnings.warn(
            "smallest variance-ratio eigenvalues are numerically tied",
            EstimationWarning,
            stacklevel=3,
        )
    return float(roots[0])


def _appendix_cov(
    dataset: Dataset, beta: np.ndarray, fitted_x: np.ndarray
) -> np.ndarray:
    """Homoscedastic covariance sigma2 * inv(D'D), D = (1, fitted x, V)."""
    structural = np.column_stack(
        [np.ones(dataset.n), dataset.treatment, dataset.covariates]
    )
    resid = dataset.outcome - structural @ beta
    p = structural.shape[1]
    if dataset.n <= p:
        raise ValidationError(f"need more observations than coefficients (n={dataset.n}, p={p})")
    sigma2 = float(resid @ resid) / (dataset.n - p)
    d = np.column_stack([np.ones(dataset.n), fitted_x, dataset.covariates])
    try:
        _check_rank(d, ["const", "fitted_x", *dataset.covariate_names])
    except RankDeficientError as err:
        raise InstrumentIrrelevanceError(
            "fitted treatment is collinear with the exogenous columns; "
            "instruments carry no information",
            denominator=0.0,
        ) from err
    _, dtd_inv = _solve_qr(d, dataset.outcome)
    return sigma2 * dtd_inv


def _kclass_fit(dataset: Dataset, method: str) -> IvFit:
    exog, full, full_names = _designs(dataset)
    if dataset.n <= full.shape[1]:
        raise ValidationError(
            f"need more observations than first-stage coefficients "
            f"(n={dataset.n}, columns={full.shape[1]})"
        )
    _check_rank(full, full_names)
    structural = np.column_stack([np.ones(dataset.n), dataset.treatment, dataset.covariates])
    _check_rank(structural, ["const", dataset.treatment_name, *dataset.covariate_names])

    first_stage_coef, _ = _solve_qr(full, dataset.treatment)
    _check_relevance(dataset, first_stage_coef)
    fitted_x = full @ first_stage_coef
    resid_x = dataset.treatment - fitted_x
    resid_y = _residualize(dataset.outcome, full)

    kappa = _liml_kappa(dataset, exog, full) if method == "liml" else 1.0

    gram = structural.T @ structural
    rhs = structural.T @ dataset.outcome
    gram[1, 1] -= kappa * float(resid_x @ resid_x)
    rhs[1] -= kappa * float(resid_x @ resid_y)
    beta = np.linalg.solve(gram, rhs)

    cov = _appendix_cov(dataset, beta, fitted_x)
    return IvFit(
        beta1=float(beta[1]),
        beta0=float(beta[0]),
        beta2=beta[2:],
        std_errors=np.sqrt(np.diag(cov)),
        kappa=kappa,
        method=method,
        n=dataset.n,
    )


def iv_ratio(dataset: Dataset) -> IvFit:
    """Covariance-ratio estimator cov(Y, Z) / cov(X, Z).

    Requires a single instrument and no covariates.  Covariances use the
    1/N convention; the intercept is ybar - beta1 * xbar.
    """
    if dataset.n_instruments != 1 or dataset.n_covariates != 0:
        raise ValidationError(
            "iv_ratio needs exactly one instrument and no covariates; "
            "use tsls for the general case"
        )
    y, x = dataset.outcome, dataset.treatment
    z = dataset.instruments[:, 0]
    cov_yz = float(np.mean((y - y.mean()) * (z - z.mean())))
    cov_xz = float(np.mean((x - x.mean()) * (z - z.mean())))
    if abs(cov_xz) <= _IRRELEVANCE_TOL * max(x.std() * z.std(), np.finfo(float).tiny):
        raise InstrumentIrrelevanceError(
            f"instrument is uncorrelated with the treatment (cov = {cov_xz!r})",
            denominator=cov_xz,
        )
    beta1 = cov_yz / cov_xz
    beta0 = float(y.mean() - beta1 * x.mean())

    _, full, _ = _designs(dataset)
    first_stage_coef, _ = _solve_qr(full, x)
    fitted_x = full @ first_stage_coef
    cov = _appendix_cov(dataset, np.array([beta0, beta1]), fitted_x)
    return IvFit(
        beta1=beta1,
        beta0=beta0,
        beta2=np.empty(0),
        std_errors=np.sqrt(np.diag(cov)),
        kappa=1.0,
        method="iv_ratio",
        n=dataset.n,
    )


def tsls(dataset: Dataset) -> IvFit:
    """Two-stage least squares with covariates and any number of instruments."""
    return _kclass_fit(dataset, "tsls")


def liml(dataset: Dataset) -> IvFit:
    """Limited-information maximum likelihood as a k-class estimator.

    kappa is the smallest root of det(W'M_V W - kappa W'M_ZV W) = 0 with
    W = (y, x); the coefficients are the k-class solution at that kappa.
    kappa >= 1 always, with equality (to rounding) when just-identified.
    """
    return _kclass_fit(dataset, "liml")


def ils(dataset: Dataset) -> IvFit:
    """Indirect least squares: the ratio of the two reduced-form slopes.

    Requires a single instrument.  With covariates, both reduced forms
    include them, and the remaining structural coefficients are recovered
    from the reduced-form ones.
    """
    if dataset.n_instruments != 1:
        raise ValidationError("ils is defined for a single instrument")
    design = np.column_stack([dataset.instruments, dataset.covariates])
    names = [*dataset.instrument_names, *dataset.covariate_names]
    fit_y = ols(dataset.outcome, design, regressor_names=names)
    fit_x = ols(dataset.treatment, design, regressor_names=names)

    pi11 = fit_y.coefficients[1]
    pi21 = fit_x.coefficients[1]
    sd_z = dataset.instruments[:, 0].std()
    sd_x = dataset.treatment.std()
    if abs(pi21) * sd_z <= _IRRELEVANCE_TOL * max(sd_x, np.finfo(float).tiny):
        raise InstrumentIrrelevanceError(
            f"reduced-form treatment slope is degenerate ({pi21!r})",
            denominator=float(pi21),
        )
    beta1 = float(pi11 / pi21)
    beta0 = float(fit_y.coefficients[0] - beta1 * fit_x.coefficients[0])
    beta2 = fit_y.coefficients[2:] - beta1 * fit_x.coefficients[2:]

    _, full, _ = _designs(dataset)
    first_stage_coef, _ = _solve_qr(full, dataset.treatment)
    fitted_x = full @ first_stage_coef
    cov = _appendix_cov(dataset, np.concatenate([[beta0, beta1], beta2]), fitted_x)
    return IvFit(
        beta1=beta1,
        beta0=beta0,
        beta2=beta2,
        std_errors=np.sqrt(np.diag(cov)),
        kappa=1.0,
        method="ils",
        n=dataset.n,
    )


def per_instrument_estimates(dataset: Dataset) -> np.ndarray:
    """One reduced-form ratio per instrument, as a dispersion diagnostic.

    Each entry k is the indirect-least-squares ratio using instrument k
    alone (all covariates included in both reduced forms).  Entries whose
    single-instrument slope is degenerate are flagged as NaN; no formal
    test statistic is attached.
    """
    if dataset.n_instruments < 2:
        raise ValidationError("per-instrument comparison needs at least two instruments")
    _, full, full_names = _designs(dataset)
    if dataset.n <= full.shape[1]:
        raise ValidationError(
            f"need more observations than first-stage coefficients "
            f"(n={dataset.n}, columns={full.shape[1]})"
        )
    _check_rank(full, full_names)

    estimates = np.full(dataset.n_instruments, np.nan)
    for k in range(dataset.n_instruments):
        design = np.column_stack([dataset.instruments[:, k], dataset.covariates])
        fit_y = ols(dataset.outcome, design)
        fit_x = ols(dataset.treatment, design)
        pi21 = fit_x.coefficients[1]
        sd_z = dataset.instruments[:, k].std()
        sd_x = dataset.treatment.std()
        if abs(pi21) * sd_z <= _IRRELEVANCE_TOL * max(sd_x, np.finfo(float).tiny):
            continue
        estimates[k] = fit_y.coefficients[1] / pi21
    return estimates


class KClassIV(RegressorMixin, BaseEstimator):
    """Instrumental-variables regression with the scikit-learn API.

    Parameters
    ----------
    method : str
        One of ``"iv"`` (covariance ratio, single instrument, no
        covariates), ``"ils"``, ``"tsls"`` or ``"liml"``.

    The endogenous regressor goes in ``X`` (a single column); instruments
    and optional exogenous covariates are passed to ``fit`` as keyword
    arguments, mirroring how the sampling process separates them.
    """

    def __init__(self, method: str = "tsls"):
        self.method = method

    def fit(self, X, y, *, instruments, covariates=None):
        x = np.asarray(X, dtype=float)
        if x.ndim == 2:
            if x.shape[1] != 1:
                raise ValidationError("exactly one endogenous regressor is supported")
            x = x[:, 0]
        dataset = Dataset(
            outcome=y, treatment=x, instruments=instruments, covariates=covariates
        )
        if self.method == "iv":
            result = iv_ratio(dataset)
        elif self.method == "ils":
            result = ils(dataset)
        elif self.method == "tsls":
            result = tsls(dataset)
        elif self.method == "liml":
            result = liml(dataset)
        else:
            raise ValidationError(f"unknown method {self.method!r}")
        self.fit_result_ = result
        self.endog_coef_ = result.beta1
        self.intercept_ = result.beta0
        self.covariate_coef_ = np.array(result.beta2)
        self.kappa_ = result.kappa
        self.std_errors_ = np.array(result.std_errors)
        self.n_features_in_ = 1
        return self

    def predict(self, X, covariates=None):
        x = np.asarray(X, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        out = self.intercept_ + self.endog_coef_ * x
        if self.covariate_coef_.size:
            if covariates is None:
                raise ValidationError("fit used covariates; pass them to predict as well")
            out = out + np.asarray(covariates, float) @ self.covariate_coef_
        return out
