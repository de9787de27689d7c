import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivkit import Dataset, RankDeficientError, ValidationError, ols, reduced_forms

from conftest import make_iv_dataset


class TestOls:
    def test_exact_fit(self):
        x = np.array([1.0, 2.0, 3.0])
        fit = ols(2.0 * x, x[:, None])
        assert fit.coefficients[1] == pytest.approx(2.0, abs=1e-12)
        assert fit.coefficients[0] == pytest.approx(0.0, abs=1e-12)
        assert fit.residual_variance == 0.0

    def test_hand_solved_normal_equations(self):
        # Sxx = 5, Sxy = 3 around the means -> slope 3/5, intercept 0.1
        y = np.array([0.0, 1.0, 1.0, 2.0])
        x = np.array([0.0, 1.0, 2.0, 3.0])
        fit = ols(y, x[:, None])
        assert fit.coefficients[1] == pytest.approx(0.6, abs=1e-12)
        assert fit.coefficients[0] == pytest.approx(0.1, abs=1e-12)

    def test_residual_variance_uses_n_minus_p(self, rng):
        x = rng.standard_normal((30, 2))
        y = rng.standard_normal(30)
        fit = ols(y, x)
        design = np.column_stack([np.ones(30), x])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        rss = float(((y - design @ coef) ** 2).sum())
        assert fit.residual_variance == pytest.approx(rss / (30 - 3), rel=1e-10)

    def test_coef_cov_matches_closed_form(self, rng):
        x = rng.standard_normal((50, 1))
        y = 1.0 + 2.0 * x[:, 0] + rng.standard_normal(50)
        fit = ols(y, x)
        design = np.column_stack([np.ones(50), x])
        expected = fit.residual_variance * np.linalg.inv(design.T @ design)
        np.testing.assert_allclose(fit.coef_cov, expected, rtol=1e-8)

    def test_coef_cov_symmetric_psd(self, rng):
        x = rng.standard_normal((40, 3))
        fit = ols(rng.standard_normal(40), x)
        np.testing.assert_array_equal(fit.coef_cov, fit.coef_cov.T)
        assert np.linalg.eigvalsh(fit.coef_cov).min() >= -1e-14

    def test_rank_deficient_duplicate_column(self, rng):
        col = rng.standard_normal(20)
        with pytest.raises(RankDeficientError):
            ols(rng.standard_normal(20), np.column_stack([col, col]))

    def test_rank_deficiency_reports_column(self, rng):
        x1 = rng.standard_normal(20)
        const = np.ones(20)
        with pytest.raises(RankDeficientError, match="collinear"):
            ols(rng.standard_normal(20), np.column_stack([x1, const]), regressor_names=["x1", "dup"])

    def test_too_few_observations(self):
        with pytest.raises(ValidationError, match="more observations"):
            ols([1.0, 2.0], [[1.0], [2.0]])

    def test_named_lookup(self, rng):
        x = rng.standard_normal((25, 2))
        fit = ols(rng.standard_normal(25), x, regressor_names=["a", "b"])
        assert fit.regressor_names == ("const", "a", "b")
        assert fit.coefficient("a") == pytest.approx(fit.coefficients[1])
        assert fit.std_error("b") == pytest.approx(fit.std_errors[2])

    def test_residuals_orthogonal_and_centered(self, rng):
        x = rng.standard_normal((80, 3))
        y = x @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(80)
        fit = ols(y, x)
        design = np.column_stack([np.ones(80), x])
        resid = y - design @ fit.coefficients
        scale = np.abs(y).sum()
        assert abs(resid.sum()) <= 1e-10 * scale
        assert np.abs(design.T @ resid).max() <= 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(min_value=0.01, max_value=100.0), seed=st.integers(0, 2**31 - 1))
def test_affine_equivariance(scale, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((40, 2))
    y = 0.5 + x @ np.array([1.5, -0.7]) + rng.standard_normal(40)
    base = ols(y, x)
    rescaled = x.copy()
    rescaled[:, 0] *= scale
    other = ols(y, rescaled)
    assert other.coefficients[1] == pytest.approx(base.coefficients[1] / scale, rel=1e-8)
    fitted_base = np.column_stack([np.ones(40), x]) @ base.coefficients
    fitted_other = np.column_stack([np.ones(40), rescaled]) @ other.coefficients
    np.testing.assert_allclose(fitted_base, fitted_other, rtol=1e-8, atol=1e-10)


class TestReducedForms:
    def test_flu_itt_coefficients(self, flu_dataset):
        outcome_fit, treatment_fit = reduced_forms(flu_dataset)
        assert round(outcome_fit.coefficient("z"), 4) == -0.0147
        assert round(treatment_fit.coefficient("z"), 4) == 0.1184
        # exact arm-mean differences
        assert outcome_fit.coefficient("z") == pytest.approx(115 / 1472 - 129 / 1389, abs=1e-12)
        assert treatment_fit.coefficient("z") == pytest.approx(453 / 1472 - 263 / 1389, abs=1e-12)

    def test_flu_itt_outcome_se(self, flu_dataset):
        outcome_fit, _ = reduced_forms(flu_dataset)
        # OLS homoscedastic s.e.; the published print is 0.011
        assert outcome_fit.std_error("z") == pytest.approx(0.010448, abs=1e-5)

    def test_binary_instrument_equals_arm_mean_difference(self, rng):
        z = rng.integers(0, 2, 60).astype(float)
        if z.max() == z.min():
            z[0] = 1 - z[0]
        y = rng.standard_normal(60)
        x = rng.standard_normal(60)
        d = Dataset(outcome=y, treatment=x, instruments=z[:, None])
        outcome_fit, treatment_fit = reduced_forms(d)
        diff_y = y[z == 1].mean() - y[z == 0].mean()
        diff_x = x[z == 1].mean() - x[z == 0].mean()
        assert outcome_fit.coefficients[1] == pytest.approx(diff_y, rel=1e-10)
        assert treatment_fit.coefficients[1] == pytest.approx(diff_x, rel=1e-10)

    def test_null_instrument_coefficients_shrink(self, rng):
        # z independent of everything: coefficient is O(1/sqrt(n))
        n = 40_000
        z = rng.standard_normal(n)
        d = Dataset(
            outcome=rng.standard_normal(n),
            treatment=rng.standard_normal(n),
            instruments=z[:, None],
        )
        outcome_fit, treatment_fit = reduced_forms(d)
        assert abs(outcome_fit.coefficients[1]) < 0.02
        assert abs(treatment_fit.coefficients[1]) < 0.02

    def test_includes_covariates(self, rng):
        d = make_iv_dataset(rng, n=200, k=1, n_cov=2)
        outcome_fit, treatment_fit = reduced_forms(d)
        assert outcome_fit.regressor_names == ("const", "z1", "v1", "v2")
        assert treatment_fit.regressor_names == ("const", "z1", "v1", "v2")
