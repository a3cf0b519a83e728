import numpy as np
import pytest
from scipy.special import logit

import _oracles
from npdif.logistic import chi2_sf, fit_logistic, lrt_dif

X8 = np.array([-2, -1.5, -1, -0.5, 0.5, 1, 1.5, 2.0])
Y8 = np.array([0, 1, 0, 1, 1, 0, 1, 1.0])


class TestFit:
    def test_intercept_only(self):
        y = np.array([1, 0, 0, 1, 1, 1, 0, 1, 1, 1.0])
        fit = fit_logistic(np.ones((10, 1)), y)
        p = y.mean()
        assert fit.converged
        assert fit.coefficients[0] == pytest.approx(logit(p))
        assert fit.log_likelihood == pytest.approx(10 * (p * np.log(p) + (1 - p) * np.log(1 - p)))

    def test_gradient_ascent_oracle(self):
        b0, b1 = _oracles.logistic_gradient_ascent(X8.tolist(), Y8.tolist())
        fit = fit_logistic(np.column_stack([np.ones(8), X8]), Y8)
        np.testing.assert_allclose(fit.coefficients, [b0, b1], atol=1e-4)

    def test_affine_invariance(self):
        design = np.column_stack([np.ones(8), X8])
        shifted = np.column_stack([np.ones(8), 3 * X8 - 1])
        a = fit_logistic(design, Y8)
        b = fit_logistic(shifted, Y8)
        assert a.log_likelihood == pytest.approx(b.log_likelihood, abs=1e-9)
        assert b.coefficients[1] == pytest.approx(a.coefficients[1] / 3)

    def test_separation_flagged(self):
        x = np.array([-2, -1, -0.5, 0.5, 1, 2.0])
        fit = fit_logistic(np.column_stack([np.ones(6), x]), (x > 0).astype(float))
        assert fit.diagnostics.get("separation")
        assert not fit.converged

    def test_rank_deficient(self):
        with pytest.raises(ValueError):
            fit_logistic(np.column_stack([np.ones(8), X8, 2 * X8]), Y8)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fit_logistic(np.ones((5, 1)), np.ones(4))

    def test_unrelated_covariate_slope_small(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=20_000)
        y = (rng.random(20_000) < 0.4).astype(float)
        fit = fit_logistic(np.column_stack([np.ones_like(x), x]), y)
        assert abs(fit.coefficients[1]) < 0.05


class TestLrt:
    def test_chi2_two_df_closed_form(self):
        for x in (0.5, 3.0, 11.411):
            assert chi2_sf(x, 2) == pytest.approx(np.exp(-x / 2))
        assert chi2_sf(0.0, 2) == 1.0

    def test_duplicated_reference_rows(self):
        rng = np.random.default_rng(4)
        theta = rng.normal(size=150)
        y = (rng.random(150) < 1 / (1 + np.exp(-theta))).astype(float)
        scores = np.r_[theta, theta]
        group = np.r_[np.zeros(150), np.ones(150)]
        res = lrt_dif(scores, group, np.r_[y, y])
        assert res.T_hat == pytest.approx(0.0, abs=1e-8)
        assert res.p_value == pytest.approx(1.0, abs=1e-6)

    def test_result_fields(self):
        rng = np.random.default_rng(1)
        theta = rng.normal(size=200)
        g = np.repeat([0, 1], 100)
        y = (rng.random(200) < 1 / (1 + np.exp(-(theta - g)))).astype(float)
        res = lrt_dif(theta, g, y, item="q")
        assert res.method == "logistic" and res.item == "q"
        assert np.isnan(res.z) and np.isnan(res.sigma2_hat)
        assert res.p_value < 0.01
        assert res.diagnostics["converged"]

    def test_verbal_aggression(self, verbal_csv):
        from npdif.data import load_response_csv, standardized_total_score
        rm = load_response_csv(verbal_csv, group_col="Gender", reference_label="F")
        i = rm.item_index("S2WantShout")
        res = lrt_dif(standardized_total_score(rm), rm.group, rm.responses[:, i])
        assert res.T_hat == pytest.approx(11.411, abs=0.01)
        assert res.p_value == pytest.approx(0.003, abs=0.001)
