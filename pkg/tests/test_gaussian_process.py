import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tempres.gaussian_process import (
    cov_matrix,
    cov_pair,
    cross_moment,
    fourth_moment,
    gramian,
    grid_covariances,
    lyapunov_solve,
    matrix_exponential,
    second_moment,
    transition,
)
from tempres.system import ScalarSystem, VectorSystem

import oracles

OU = ScalarSystem(-1.0)
BM = ScalarSystem(0.0)


class TestScalarMoments:
    def test_second_moment_values(self):
        assert second_moment(OU, 1.0) == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-15)
        assert second_moment(BM, 2.0) == pytest.approx(2.0, rel=1e-15)
        assert second_moment(OU, 0.0) == 0.0

    def test_fourth_moment_values(self):
        assert fourth_moment(OU, 1.0) == pytest.approx(0.75 * (1 - math.exp(-2)) ** 2, rel=1e-14)
        assert fourth_moment(BM, 1.0) == pytest.approx(3.0, rel=1e-15)
        assert fourth_moment(OU, 0.0) == 0.0

    def test_cross_moment_isserlis(self):
        s, t = 0.5, 1.0
        expected = second_moment(OU, s) * second_moment(OU, t) + 2 * cov_pair(OU, s, t) ** 2
        assert cross_moment(OU, s, t) == pytest.approx(expected, rel=1e-13)

    def test_cross_moment_edges(self):
        assert cross_moment(OU, 0.7, 0.7) == pytest.approx(fourth_moment(OU, 0.7), rel=1e-14)
        assert cross_moment(OU, 0.0, 3.0) == 0.0

    def test_cov_pair_values(self):
        assert cov_pair(BM, 1.0, 3.0) == pytest.approx(1.0)
        assert cov_pair(OU, 1.0, 2.0) == pytest.approx(math.exp(-3) * (math.e**2 - 1) / 2, rel=1e-14)
        assert cov_pair(OU, 0.0, 2.0) == 0.0
        assert cov_pair(OU, 1.3, 1.3) == pytest.approx(second_moment(OU, 1.3), rel=1e-15)

    @given(
        a=st.floats(-3.0, 0.0),
        s=st.floats(0.0, 5.0),
        t=st.floats(0.0, 5.0),
    )
    def test_against_independent_formula(self, a, s, t):
        sys = ScalarSystem(a, 1.3)
        ref = float(oracles.cov(a, 1.3, s, t))
        assert cov_pair(sys, s, t) == pytest.approx(ref, rel=1e-12, abs=1e-300)
        ref4 = float(oracles.cov(a, 1.3, s, s) * oracles.cov(a, 1.3, t, t) + 2 * oracles.cov(a, 1.3, s, t) ** 2)
        assert cross_moment(sys, s, t) == pytest.approx(ref4, rel=1e-12, abs=1e-300)

    def test_continuity_through_zero_drift(self):
        for a in (-1e-5, -1e-7, -1e-9):
            assert second_moment(ScalarSystem(a), 2.0) == pytest.approx(2.0, rel=10 * abs(a))
            assert cross_moment(ScalarSystem(a), 1.0, 2.0) == pytest.approx(1.0 * (2.0 + 2.0), rel=10 * abs(a))

    def test_broadcasting(self):
        t = np.linspace(0, 2, 5)
        out = cov_pair(OU, t[:, None], t[None, :])
        assert out.shape == (5, 5)
        np.testing.assert_allclose(out, out.T, rtol=0, atol=0)


class TestMatrixHelpers:
    def test_expm_special_cases(self):
        np.testing.assert_array_equal(matrix_exponential(np.zeros((3, 3)), 2.0), np.eye(3))
        np.testing.assert_allclose(matrix_exponential(np.diag([-1.0, -2.0])), np.diag([math.exp(-1), math.exp(-2)]), rtol=1e-15)
        np.testing.assert_allclose(matrix_exponential([[0.0, 1.0], [0.0, 0.0]]), [[1, 1], [0, 1]], atol=1e-15)

    @pytest.mark.parametrize(
        "A, W, P",
        [
            (-np.eye(4), np.eye(4), np.eye(4) / 2),
            ([[-0.5]], [[2.0]], [[2.0]]),
            (np.diag([-1.0, -2.0]), np.eye(2), np.diag([0.5, 0.25])),
        ],
    )
    def test_lyapunov_known(self, A, W, P):
        np.testing.assert_allclose(lyapunov_solve(A, W), P, rtol=1e-14, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
    def test_lyapunov_residual_and_spd(self, seed, n):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, n))
        A = X - (np.abs(np.linalg.eigvals(X).real).max() + 0.5) * np.eye(n)
        P = lyapunov_solve(A, np.eye(n))
        assert np.linalg.norm(A @ P + P @ A.T + np.eye(n)) <= 1e-10 * np.linalg.norm(P)
        np.testing.assert_allclose(P, P.T, atol=1e-14)
        assert np.linalg.eigvalsh(P).min() > 0


class TestGramian:
    def test_decoupled(self):
        sys = VectorSystem(-np.eye(3))
        np.testing.assert_allclose(gramian(sys, 1.0), (1 - math.exp(-2)) / 2 * np.eye(3), rtol=1e-14)

    def test_scalar_embedding(self):
        sys = VectorSystem([[-0.7]], 1.4)
        for s, t in [(0.3, 1.1), (2.0, 0.5), (1.0, 1.0)]:
            assert cov_matrix(sys, s, t)[0, 0] == pytest.approx(cov_pair(ScalarSystem(-0.7, 1.4), s, t), rel=1e-12)

    def test_zero_time(self):
        np.testing.assert_array_equal(cov_matrix(VectorSystem(-np.eye(2)), 0.0, 1.5), np.zeros((2, 2)))

    def test_non_normal_against_quadrature(self):
        A = np.array([[-1.0, 3.0], [0.0, -0.5]])
        sys = VectorSystem(A, 0.8)
        from scipy.integrate import quad_vec
        from scipy.linalg import expm

        ref, _ = quad_vec(lambda u: 0.64 * expm(A * u) @ expm(A * u).T, 0, 2.0, epsabs=1e-13, epsrel=1e-13)
        np.testing.assert_allclose(gramian(sys, 2.0), ref, rtol=1e-10)

    def test_marginally_stable_uses_quadrature(self):
        # Brownian motion in the first coordinate
        sys = VectorSystem(np.diag([0.0, -1.0]))
        G = gramian(sys, 2.0)
        assert G[0, 0] == pytest.approx(2.0, rel=1e-10)
        assert G[1, 1] == pytest.approx((1 - math.exp(-4)) / 2, rel=1e-10)

    def test_tiny_time_series_branch(self):
        sys = VectorSystem(-np.eye(2))
        G = gramian(sys, 1e-9)
        np.testing.assert_allclose(G, 1e-9 * (1 - 1e-9) * np.eye(2), rtol=1e-15)

    def test_grid_covariances_match_pointwise(self):
        A = np.array([[-1.0, 0.4, 0.0], [0.0, -1.2, 0.3], [0.1, 0.0, -0.9]])
        sys = VectorSystem(A)
        gram, powers = grid_covariances(sys, 0.25, 9)
        for k, d in [(0, 0), (3, 2), (5, 3), (8, 0)]:
            C = gram[k] @ powers[d].T
            np.testing.assert_allclose(C, cov_matrix(sys, 0.25 * k, 0.25 * (k + d)), rtol=1e-12, atol=1e-15)


class TestTransition:
    def test_wiener(self):
        law = transition(BM, 0.1)
        assert law.phi == 1.0 and law.step_cov == pytest.approx(0.1)

    def test_ou(self):
        law = transition(OU, 0.5)
        assert law.phi == pytest.approx(math.exp(-0.5), rel=1e-15)
        assert law.step_cov == pytest.approx((1 - math.exp(-1)) / 2, rel=1e-15)

    def test_matrix_diagonal(self):
        law = transition(VectorSystem(-np.eye(2)), 1.0)
        np.testing.assert_allclose(law.phi, math.exp(-1) * np.eye(2), rtol=1e-15)
        np.testing.assert_allclose(law.step_cov, (1 - math.exp(-2)) / 2 * np.eye(2), rtol=1e-14)
        L = law.noise_factor
        np.testing.assert_allclose(L @ L.T, law.step_cov, rtol=1e-14)

    def test_rank_deficient_noise_factor(self):
        from tempres.gaussian_process import TransitionLaw

        C = np.array([[1.0, 1.0], [1.0, 1.0]])
        L = TransitionLaw(np.eye(2), C).noise_factor
        np.testing.assert_allclose(L @ L.T, C, atol=1e-14)
