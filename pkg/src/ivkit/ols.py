"""Ordinary least squares with homoscedastic covariance.

The solver goes through a QR decomposition rather than the normal
equations, with rank decided by singular values below ``RANK_TOL`` times
the largest one.  Residual variance uses the n - p degrees-of-freedom
convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin

from .datasets import Dataset
from .errors import RankDeficientError, ValidationError
from .validation import as_matrix, as_vector, readonly

__all__ = ["OlsFit", "ols", "reduced_forms", "OLS", "RANK_TOL"]

RANK_TOL = 1e-10

# Residuals smaller than this (relative to the outcome scale) count as an
# exact fit and produce residual_variance == 0.
_EXACT_FIT_TOL = 1e-12


@dataclass(frozen=True)
class OlsFit:
    """Coefficients, homoscedastic covariance and residual variance.

    ``coefficients`` is ordered intercept first (when fitted), then the
    named regressors; ``coef_cov`` is aligned the same way.
    """

    coefficients: np.ndarray
    coef_cov: np.ndarray
    residual_variance: float
    n: int
    regressor_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", readonly(np.asarray(self.coefficients, float)))
        object.__setattr__(self, "coef_cov", readonly(np.asarray(self.coef_cov, float)))
        object.__setattr__(self, "regressor_names", tuple(self.regressor_names))

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.coef_cov))

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.regressor_names.index(name)])

    def std_error(self, name: str) -> float:
        return float(self.std_errors[self.regressor_names.index(name)])


def _check_rank(design: np.ndarray, names: Sequence[str]) -> None:
    """Raise RankDeficientError, naming an offending column when detectable."""
    singular = np.linalg.svd(design, compute_uv=False)
    if singular[0] == 0.0 or singular[-1] > RANK_TOL * singular[0]:
        if singular[0] == 0.0:
            raise RankDeficientError("design matrix is identically zero")
        return
    full_rank = np.linalg.matrix_rank(design, tol=RANK_TOL * singular[0])
    for j in range(design.shape[1]):
        reduced = np.delete(design, j, axis=1)
        if np.linalg.matrix_rank(reduced, tol=RANK_TOL * singular[0]) == full_rank:
            raise RankDeficientError(
                f"design matrix is rank deficient; column {names[j]!r} is collinear "
                "with the others",
                column=str(names[j]),
            )
    raise RankDeficientError("design matrix is rank deficient")


def _solve_qr(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (coefficients, (X'X)^{-1}) via the thin QR of the design."""
    q, r = np.linalg.qr(design)
    coef = scipy.linalg.solve_triangular(r, q.T @ y)
    r_inv = scipy.linalg.solve_triangular(r, np.eye(r.shape[0]))
    xtx_inv = r_inv @ r_inv.T
    return coef, xtx_inv


def ols(
    y,
    regressors,
    include_intercept: bool = True,
    regressor_names: Sequence[str] | None = None,
) -> OlsFit:
    """Fit y on the given regressors by least squares.

    Parameters
    ----------
    y : array-like, shape (n,)
        Response.
    regressors : array-like, shape (n, m)
        Regressor columns (without intercept).
    include_intercept : bool
        Prepend a column of ones (default True).
    regressor_names : sequence of str, optional
        Labels for the regressor columns; defaults to ``x1 .. xm``.

    Returns
    -------
    OlsFit
        With ``residual_variance = RSS / (n - p)`` and
        ``coef_cov = residual_variance * (X'X)^{-1}``.

    Raises
    ------
    RankDeficientError
        If the design (including intercept) is rank deficient.
    ValidationError
        If there are no spare degrees of freedom (n <= p).
    """
    y = as_vector(y, "y")
    x = as_matrix(regressors, "regressors", allow_empty=True)
    if x.shape[0] != y.shape[0]:
        raise ValidationError(f"regressors have {x.shape[0]} rows but y has {y.shape[0]}")

    names = list(regressor_names) if regressor_names is not None else [
        f"x{j + 1}" for j in range(x.shape[1])
    ]
    if len(names) != x.shape[1]:
        raise ValidationError("regressor_names length does not match regressor count")

    if include_intercept:
        design = np.column_stack([np.ones(y.shape[0]), x])
        names = ["const", *names]
    else:
        design = x
        if design.shape[1] == 0:
            raise ValidationError("nothing to fit: no regressors and no intercept")

    n, p = design.shape
    if n <= p:
        raise ValidationError(f"need more observations than coefficients (n={n}, p={p})")
    _check_rank(design, names)

    coef, xtx_inv = _solve_qr(design, y)
    resid = y - design @ coef
    rss = float(resid @ resid)
    scale = max(1.0, float(np.abs(y).max()))
    if np.abs(resid).max() <= _EXACT_FIT_TOL * scale:
        rss = 0.0
    residual_variance = rss / (n - p)
    coef_cov = residual_variance * xtx_inv
    coef_cov = (coef_cov + coef_cov.T) / 2.0

    return OlsFit(
        coefficients=coef,
        coef_cov=coef_cov,
        residual_variance=residual_variance,
        n=n,
        regressor_names=tuple(names),
    )


def reduced_forms(dataset: Dataset) -> tuple[OlsFit, OlsFit]:
    """Regress outcome and treatment on (intercept, instruments, covariates).

    Returns the pair (outcome fit, treatment fit).  With a single binary
    instrument and no covariates the instrument coefficients are exactly the
    two arm-mean differences (the intention-to-treat effects).
    """
    design = np.column_stack([dataset.instruments, dataset.covariates])
    names = [*dataset.instrument_names, *dataset.covariate_names]
    outcome_fit = ols(dataset.outcome, design, regressor_names=names)
    treatment_fit = ols(dataset.treatment, design, regressor_names=names)
    return outcome_fit, treatment_fit


class OLS(RegressorMixin, BaseEstimator):
    """Least-squares regression with the scikit-learn estimator API.

    Thin wrapper around :func:`ols` exposing ``coef_`` / ``intercept_`` and
    the homoscedastic coefficient covariance, so the fit composes with
    pipelines and model-selection utilities.
    """

    def __init__(self, fit_intercept: bool = True):
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X = as_matrix(X, "X")
        y = as_vector(y, "y")
        result = ols(y, X, include_intercept=self.fit_intercept)
        self.fit_result_ = result
        if self.fit_intercept:
            self.intercept_ = float(result.coefficients[0])
            self.coef_ = np.array(result.coefficients[1:])
        else:
            self.intercept_ = 0.0
            self.coef_ = np.array(result.coefficients)
        self.coef_cov_ = np.array(result.coef_cov)
        self.resid_variance_ = result.residual_variance
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = as_matrix(X, "X")
        return self.intercept_ + X @ self.coef_
