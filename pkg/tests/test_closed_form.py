import math

import numpy as np
import pytest

from tempres.closed_form import (
    discounted_constants,
    expected_estimate_discounted,
    fit_leading_coefficients,
    leading_constants,
    mse_approx_and_bounds,
    mse_finite_discounted,
    mse_finite_undiscounted,
    mse_for_plan,
    mse_infinite_discounted,
    mse_marginal,
    small_tail_regime,
    variance_constant,
)
from tempres.errors import DivergentTail
from tempres.ground_truth import value_finite_scalar
from tempres.oracle import estimator_mean, mse_exact
from tempres.system import ScalarSystem, VectorSystem, build_plan

import oracles

G = math.exp(-1)


class TestFiniteUndiscounted:
    @pytest.mark.parametrize("a", [-2.0, -1.0, -0.1, -1e-3])
    @pytest.mark.parametrize("T, h", [(1.0, 0.5), (1.0, 1 / 64), (8.0, 0.5), (8.0, 8.0), (8.0, 1 / 8)])
    def test_against_literal_formula(self, a, T, h):
        ref = float(oracles.literal_mse(a, 1.3, T, h, 2**14))
        assert mse_finite_undiscounted(a, 1.3, T, h, 2**14) == pytest.approx(ref, rel=1e-13)

    def test_against_oracle(self):
        plan = build_plan(0.5, 2**14, 8.0)
        assert mse_finite_undiscounted(-1, 1, 8, 0.5, 2**14) == pytest.approx(mse_exact(ScalarSystem(-1.0), plan).total, rel=1e-12)

    def test_single_point_at_origin(self):
        # h = T, B = 1: the estimate is identically 0, so MSE = V_T^2
        vt = value_finite_scalar(ScalarSystem(-1.0), 2.0).value
        assert mse_finite_undiscounted(-1, 1, 2, 2, 1) == pytest.approx(vt**2, rel=1e-12)

    def test_continuity_at_zero_drift(self):
        got = mse_finite_undiscounted(-1e-8, 1, 1, 0.25, 64)
        assert got == pytest.approx(mse_marginal(1, 1, 0.25, 64), rel=1e-6)

    @pytest.mark.parametrize("a", [-1e-4, -1e-6, -1e-10])
    def test_no_cancellation_near_zero(self, a):
        ref = float(oracles.literal_mse(a, 1, 2, 0.1, 1000))
        assert mse_finite_undiscounted(a, 1, 2, 0.1, 1000) == pytest.approx(ref, rel=1e-12)

    def test_degenerate_noise(self):
        assert mse_finite_undiscounted(-1, 0, 8, 0.5, 100) == 0.0
        assert mse_marginal(0, 1, 0.1, 1000) == 0.0

    def test_marginal_example(self):
        assert mse_marginal(1, 1, 0.1, 1000) == pytest.approx(0.0025 + 1 / 300 - 0.00060333333333333, rel=1e-12)
        assert mse_marginal(1, 1, 0.1, 1000) == pytest.approx(float(oracles.marginal_mse(1, 1, 0.1, 1000)), rel=1e-14)

    def test_leading_constant(self):
        c1, c2 = leading_constants(-1, 1, 1)
        assert c1 == pytest.approx((math.exp(-2) - 1) ** 2 / 16, rel=1e-14)
        assert c1 == pytest.approx(0.046728, rel=1e-4)
        assert c2 > 0

    def test_leading_order_dominates(self):
        a, T = -1.0, 1.0
        ratios = []
        for m in (8, 32, 128, 512):
            h, B = T / m, m**3
            ratios.append(mse_approx_and_bounds(a, 1, T, h, B).approx / mse_finite_undiscounted(a, 1, T, h, B))
        errs = [abs(r - 1) for r in ratios]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 0.01

    @pytest.mark.parametrize("a", [-2.0, -1.0, -0.1])
    @pytest.mark.parametrize("T", [1.0, 8.0])
    @pytest.mark.parametrize("B", [2**10, 2**14, 2**18])
    @pytest.mark.parametrize("m", [10, 40, 200])
    def test_sandwich(self, a, T, B, m):
        h = T / m
        if h > 0.1 or B < m:
            pytest.skip("outside the stated regime")
        # the bracket holds up to lower-order terms, which the slack absorbs
        r = mse_approx_and_bounds(a, 1, T, h, B)
        exact = mse_finite_undiscounted(a, 1, T, h, B)
        assert r.lower - r.slack <= exact <= r.upper


class TestDiscounted:
    def test_variance_constant(self):
        assert variance_constant(-1.0, G) == pytest.approx(1 / 18, rel=1e-15)

    def test_variance_constant_domain(self):
        with pytest.raises(DivergentTail):
            variance_constant(-1.0, 1.0)

    def test_first_bias_constant(self):
        C1, _, _ = discounted_constants(-1.0, 0.9, 8.0)
        assert C1 == pytest.approx(0.9**16 * (1 - math.exp(-16)) ** 2 / 16, rel=1e-14)

    @pytest.mark.parametrize("h", [0.1, 0.05, 0.02])
    def test_finite_discounted_against_oracle(self, h):
        T, gamma, B = 8.0, 0.9, 10**6
        plan = build_plan(h, B, T, gamma, "finite-discounted")
        exact = mse_exact(ScalarSystem(-1.0), plan).total
        tol = 10 * (h**5 + gamma**T / B + 1 / B) * max(1, T**5)
        assert abs(mse_finite_discounted(-1, 1, T, gamma, h, B) - exact) <= tol

    @pytest.mark.parametrize("h", [0.1, 0.05])
    def test_infinite_against_oracle(self, h):
        T, B = 30.0, 10**6
        plan = build_plan(h, B, T, G, "infinite-discounted")
        exact = mse_exact(ScalarSystem(-1.0), plan).total
        assert small_tail_regime(G, T, h)
        assert abs(mse_infinite_discounted(-1, 1, T, G, h, B) - exact) <= 20 * (h**5 + G**T + 1 / B)

    def test_constant_tail_branch_tracks_oracle(self):
        # short horizon: gamma^T is not small, the explicit bias/tail form applies
        T, h, B = 2.0, 0.1, 10**5
        plan = build_plan(h, B, T, G, "infinite-discounted")
        exact = mse_exact(ScalarSystem(-1.0), plan)
        approx = mse_infinite_discounted(-1, 1, T, G, h, B, regime="constant-tail")
        squared = exact.bias_sq + exact.truncation_sq + exact.cross_term
        assert approx - T * variance_constant(-1.0, G) / (h * B) == pytest.approx(squared, rel=1e-10)

    @pytest.mark.parametrize("a", [-1.0, 0.0])
    def test_expected_estimate(self, a):
        plan = build_plan(0.25, 100, 5.0, 0.8, "finite-discounted")
        got = expected_estimate_discounted(a, 1.1, 5.0, 0.8, 0.25)
        assert got == pytest.approx(estimator_mean(ScalarSystem(a, 1.1), plan), rel=1e-12)

    def test_degenerate_noise(self):
        assert mse_finite_discounted(-1, 0, 8, 0.9, 0.1, 1000) == 0.0
        assert mse_infinite_discounted(-1, 0, 30, G, 0.1, 1000) == 0.0


class TestPlanDispatch:
    def test_uses_samples_actually_drawn(self):
        # N = 3 does not divide B = 100: 99 samples are used
        plan = build_plan(1.0, 100, 3.0)
        assert mse_for_plan(ScalarSystem(-1.0), plan) == pytest.approx(mse_exact(ScalarSystem(-1.0), plan).total, rel=1e-12)

    def test_q_factor(self):
        plan = build_plan(0.5, 1024, 8.0)
        assert mse_for_plan(ScalarSystem(-1.0, 1.0, 3.0), plan) == pytest.approx(9 * mse_for_plan(ScalarSystem(-1.0), plan))


class TestLeadingFit:
    H = [1 / m for m in range(20, 161, 20)]
    BUDGETS = [2**16, 2**18, 2**20]

    def test_scalar_reduction(self):
        fit = fit_leading_coefficients(ScalarSystem(-1.0), 1.0, self.BUDGETS, self.H)
        c1, c2 = leading_constants(-1, 1, 1)
        assert fit.c_h2 == pytest.approx(c1, rel=0.05)
        assert fit.c_hB == pytest.approx(c2, rel=0.05)

    def test_decoupled_pair(self):
        # bias adds over coordinates (c_h2 x 4); variances add (c_hB x 2)
        one = fit_leading_coefficients(ScalarSystem(-1.0), 1.0, self.BUDGETS, self.H)
        two = fit_leading_coefficients(VectorSystem(-np.eye(2)), 1.0, self.BUDGETS, self.H)
        assert two.c_h2 == pytest.approx(4 * one.c_h2, rel=0.02)
        assert two.c_hB == pytest.approx(2 * one.c_hB, rel=0.02)
        assert one.c_h2 > 0 and one.c_hB > 0
