import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst
from scipy.stats import norm

import _oracles
from npdif import statistic as st
from npdif.data import GroupedScores
from npdif.simulation import dif_scenario, irc_true
from npdif.smoothing import SmoothingConfig
from npdif.support import SupportSet, build_support, common_support, reduced_support

CFG = SmoothingConfig("epanechnikov", 0.292)


def quadratic_weight(x):
    return 1 + x * x


def design_for(t0, t1, support=None):
    gs = GroupedScores(np.asarray(t0, float), np.asarray(t1, float))
    return st.DifDesign(gs, CFG, support or common_support(gs))


class TestFixedWeights:
    def test_ones(self):
        s = SupportSet(np.array([0.0, 1.0, 2.0]), np.array([1, 1, 1]))
        np.testing.assert_array_equal(st.fixed_weights(s), [1, 1, 1])

    def test_empty(self):
        assert st.fixed_weights(SupportSet(np.array([]), np.array([]))).size == 0


class TestOptimalWeights:
    support = SupportSet(np.linspace(-2, 2, 9), np.ones(9, dtype=int))
    phi = staticmethod(norm.pdf)

    def test_identical_curves(self):
        m = lambda x: irc_true(dif_scenario("b").reference_params, x)
        w = st.optimal_weights(m, m, self.phi, self.phi, self.phi, 0.5, self.support)
        np.testing.assert_array_equal(w, 0.0)

    def test_point_value(self):
        w = st.optimal_weights(lambda x: np.full_like(x, 0.5), lambda x: np.full_like(x, 0.731),
                               self.phi, self.phi, self.phi, 0.5,
                               SupportSet(np.array([0.0]), np.array([1])))
        expected = (0.5 - 0.731) / (0.5 * 0.25 + 0.5 * 0.731 * 0.269)
        assert w[0] == pytest.approx(expected)
        assert w[0] == pytest.approx(-1.034, abs=1e-3)

    def test_shift_dif_constant_sign(self):
        sc = dif_scenario("b")
        e = lambda x: norm.pdf(x, scale=np.sqrt(0.5))
        w = st.optimal_weights(lambda x: irc_true(sc.reference_params, x),
                               lambda x: irc_true(sc.focal_params, x),
                               self.phi, self.phi, e, 0.5, self.support)
        assert (w > 0).all()

    def test_curve_out_of_range(self):
        with pytest.raises(ValueError):
            st.optimal_weights(lambda x: x * 0 + 1.5, lambda x: x * 0, self.phi, self.phi,
                               self.phi, 0.5, self.support)

    def test_lambda_range(self):
        with pytest.raises(ValueError):
            st.optimal_weights(norm.cdf, norm.cdf, self.phi, self.phi, self.phi, 1.0, self.support)

    def test_denominator_floor(self):
        one = lambda x: np.ones_like(x)
        zero = lambda x: np.zeros_like(x)
        w = st.optimal_weights(one, zero, self.phi, self.phi, self.phi, 0.5, self.support)
        np.testing.assert_allclose(w, 1e12)
        assert st.weights_diverged(w)


class TestEstimatedWeights:
    def test_identical_groups_zero(self):
        t = np.linspace(-1, 1, 12)
        d = design_for(t, t)
        y = (np.arange(12) % 3 == 0).astype(float)
        np.testing.assert_allclose(st.estimated_optimal_weights(d, y, y), 0.0, atol=1e-12)

    def test_statistic_non_negative(self, small_matrix, small_groups):
        d = st.DifDesign(small_groups, CFG, build_support(small_groups, 500, np.random.default_rng(0)))
        Y = small_matrix.responses.astype(float)
        T, _, _ = st.estimated_weight_statistic(d, Y[small_matrix.group == 0], Y[small_matrix.group == 1])
        assert (np.asarray(T) >= 0).all()

    def test_divergence_flag(self):
        w = np.array([[1.0, 2e6], [3.0, 0.0]])
        np.testing.assert_array_equal(st.weights_diverged(w), [False, True])


class TestStatistic:
    def test_identical_curves(self):
        s = SupportSet(np.array([0.0, 1.0]), np.array([2, 3]))
        assert st.test_statistic([0.3, 0.6], [0.3, 0.6], [1, 5], s) == 0

    def test_constant_gap(self):
        s = SupportSet(np.array([0.0, 1.0, 3.0]), np.array([2, 3, 1]))
        assert st.test_statistic([0.5, 0.5, 0.5], [0.2, 0.2, 0.2], np.ones(3), s) == pytest.approx(0.3)

    def test_three_point_example(self):
        s = SupportSet(np.array([0.0, 0.5, 1.0]), np.array([1, 2, 1]))
        T = st.test_statistic(np.array([0.1, 0.2, -0.1]), np.zeros(3), np.ones(3), s)
        assert T == pytest.approx(0.1)

    def test_length_mismatch(self):
        s = SupportSet(np.array([0.0, 1.0]), np.array([1, 1]))
        with pytest.raises(ValueError):
            st.test_statistic([0.1], [0.1, 0.2], [1, 1], s)

    def test_matches_pair_oracle(self):
        t0, t1, y0, y1 = [-1.1, 0.2, 0.9], [-0.4, 0.5], [0, 1, 1], [1, 0]
        d = design_for(t0, t1)
        m0, m1 = d.curves(y0, y1)
        T = st.test_statistic(m0, m1, quadratic_weight(d.support.points), d.support)
        assert T == pytest.approx(-0.07379069034923809, abs=1e-12)
        assert T == pytest.approx(_oracles.statistic(t0, t1, y0, y1, quadratic_weight, 0.292))

    def test_swap_groups(self, small_matrix, small_groups):
        y = small_matrix.responses[:, 0].astype(float)
        y0, y1 = y[small_matrix.group == 0], y[small_matrix.group == 1]
        s = common_support(small_groups)
        fwd = st.fixed_weight_test(st.DifDesign(small_groups, CFG, s), y0, y1)
        swapped = GroupedScores(small_groups.theta1, small_groups.theta0)
        back = st.fixed_weight_test(st.DifDesign(swapped, CFG, common_support(swapped)), y1, y0)
        assert back.T_hat == pytest.approx(-fwd.T_hat)
        assert back.z == pytest.approx(-fwd.z)


class TestVariance:
    # 4-respondent and 5-respondent toys; expected values from the scalar double-sum oracle
    TOYS = [
        ([-1.0, 0.5], [-0.3, 1.2], [0, 1], [1, 0], 1.7378822256336088, 1.0866110346029028),
        ([-1.1, 0.2, 0.9], [-0.4, 0.5], [0, 1, 1], [1, 0], 2.2314214522372855, 1.4573285887500802),
    ]

    @pytest.mark.parametrize("t0,t1,y0,y1,printed,_", TOYS)
    def test_bernoulli_form(self, t0, t1, y0, y1, printed, _):
        d = design_for(t0, t1)
        w = quadratic_weight(d.support.points)
        # the estimator is the double sum normalised to the scale of sqrt(N) * T
        n0n1 = len(t0) * len(t1)
        assert st.variance_estimate(d, y0, y1, w) == pytest.approx(printed / n0n1, rel=1e-10)
        assert printed == pytest.approx(
            _oracles.printed_variance(t0, t1, y0, y1, quadratic_weight, 0.292))

    @pytest.mark.parametrize("t0,t1,y0,y1,_,printed", TOYS)
    def test_residual_form(self, t0, t1, y0, y1, _, printed):
        d = design_for(t0, t1)
        w = quadratic_weight(d.support.points)
        n0n1 = len(t0) * len(t1)
        assert st.variance_estimate_residual(d, y0, y1, w) == pytest.approx(printed / n0n1,
                                                                            rel=1e-10)

    @pytest.mark.parametrize("value", [0.0, 1.0])
    def test_constant_responses(self, value):
        d = design_for([-1.0, 0.1, 0.7], [-0.5, 0.4, 1.3])
        y0, y1 = np.full(3, value), np.full(3, value)
        w = np.ones(len(d.support))
        assert st.variance_estimate(d, y0, y1, w) == 0
        assert st.variance_estimate_residual(d, y0, y1, w) == 0

    @settings(max_examples=60, deadline=None)
    @given(hst.integers(0, 2**32 - 1))
    def test_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        t0, t1 = rng.normal(size=7), rng.normal(size=5)
        y0, y1 = rng.integers(0, 2, 7), rng.integers(0, 2, 5)
        d = design_for(t0, t1)
        w = rng.normal(size=len(d.support))
        assert st.variance_estimate(d, y0, y1, w) >= 0
        assert st.variance_estimate_residual(d, y0, y1, w) >= 0


class TestNormalizedStatistic:
    def test_zero_statistic(self):
        assert st.normalized_statistic(0.0, 0.0, 10, 10) == (0.0, 1.0)
        assert st.normalized_statistic(0.0, 2.0, 10, 10) == (0.0, 1.0)

    def test_two_sided_five_percent(self):
        N = 100 * 100 / 200
        z, p = st.normalized_statistic(1.959964 / np.sqrt(N), 1.0, 100, 100)
        assert z == pytest.approx(1.959964)
        assert p == pytest.approx(0.05, abs=1e-6)

    def test_zero_variance_nonzero_statistic(self):
        with pytest.raises(ValueError):
            st.normalized_statistic(0.1, 0.0, 5, 5)

    def test_batch_matches_scalar(self):
        T = np.array([0.1, -0.2, 0.0, 0.3])
        s2 = np.array([0.5, 0.2, 0.0, 0.0])
        z, p = st.normal_test_batch(T, s2, 40, 60)
        assert (z[0], p[0]) == pytest.approx(st.normalized_statistic(0.1, 0.5, 40, 60))
        assert (z[2], p[2]) == (0.0, 1.0)
        assert np.isinf(z[3]) and p[3] == 0.0

    @pytest.mark.parametrize("scale", [0.1, 10.0])
    def test_weight_scale_invariance(self, small_matrix, small_groups, scale):
        d = st.DifDesign(small_groups, CFG, common_support(small_groups))
        y = small_matrix.responses[:, 0].astype(float)
        y0, y1 = y[small_matrix.group == 0], y[small_matrix.group == 1]
        w = 1 + d.support.points ** 2
        base = st.weighted_test(d, y0, y1, w)
        scaled = st.weighted_test(d, y0, y1, scale * w)
        assert scaled.z == pytest.approx(base.z, rel=1e-10)


class TestReducedSupportAgreement:
    def test_fixed_weight_statistic(self, small_matrix, small_groups):
        y = small_matrix.responses[:, 0].astype(float)
        y0, y1 = y[small_matrix.group == 0], y[small_matrix.group == 1]
        full = common_support(small_groups)
        target = small_groups.n0 * small_groups.n1
        reduced = reduced_support(small_groups, target, np.random.default_rng(8))
        d_full = st.DifDesign(small_groups, CFG, full)
        d_red = st.DifDesign(small_groups, CFG, reduced)
        T_full = st.fixed_weight_test(d_full, y0, y1).T_hat
        T_red = st.fixed_weight_test(d_red, y0, y1).T_hat
        m0, m1 = d_full.curves(y0, y1)
        contrib = m0 - m1
        mean = np.average(contrib, weights=full.multiplicities)
        sd = np.sqrt(np.average((contrib - mean) ** 2, weights=full.multiplicities))
        assert abs(T_full - T_red) < 3 * sd / np.sqrt(target)


class TestAsymptoticPower:
    sc = dif_scenario("b")
    m0 = staticmethod(lambda x: irc_true(dif_scenario("b").reference_params, x))
    m1 = staticmethod(lambda x: irc_true(dif_scenario("b").focal_params, x))
    e = staticmethod(lambda x: norm.pdf(x, scale=np.sqrt(0.5)))

    def test_no_difference(self):
        p = st.asymptotic_power(lambda x: np.ones_like(x), self.m0, self.m1, norm.pdf, norm.pdf,
                                self.e, 0.5, alpha=0.05, diff_fn=lambda x: np.zeros_like(x))
        assert p == pytest.approx(0.05)

    def test_increasing_in_drift(self):
        ones = lambda x: np.ones_like(x)
        powers = [st.asymptotic_power(ones, self.m0, self.m1, norm.pdf, norm.pdf, self.e, 0.5,
                                      scale=s) for s in (0.5, 1, 2, 4, 8)]
        assert np.all(np.diff(powers) > 0)

    def test_optimal_beats_fixed(self):
        def optimal(x):
            v0, v1 = self.m0(x), self.m1(x)
            denom = 0.5 * (v0 * (1 - v0) + v1 * (1 - v1)) * self.e(x) / norm.pdf(x)
            return (v0 - v1) / denom

        args = (self.m0, self.m1, norm.pdf, norm.pdf, self.e, 0.5)
        for scale in (1.0, 3.0, 6.0):
            p_opt = st.asymptotic_power(optimal, *args, scale=scale)
            p_fix = st.asymptotic_power(lambda x: np.ones_like(x), *args, scale=scale)
            assert p_opt >= p_fix

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            st.asymptotic_power(np.ones_like, self.m0, self.m1, norm.pdf, norm.pdf, self.e, 0.5,
                                alpha=0)


class TestWeightedTest:
    def test_degenerate_variance_flagged(self):
        d = design_for([-1.0, 0.1, 0.7], [-0.5, 0.4, 1.3])
        res = st.weighted_test(d, np.ones(3), np.zeros(3), np.ones(len(d.support)))
        assert res.diagnostics["degenerate_variance"]
        assert res.p_value == 0.0

    def test_result_row(self, small_matrix, small_groups):
        d = st.DifDesign(small_groups, CFG, common_support(small_groups))
        y = small_matrix.responses[:, 3].astype(float)
        res = st.fixed_weight_test(d, y[small_matrix.group == 0], y[small_matrix.group == 1],
                                   item="item4")
        row = res.as_row()
        assert row["item"] == "item4" and row["method"] == "np_fixed"
        assert 0 <= row["p_value"] <= 1
        assert res.rejects(1.0)
