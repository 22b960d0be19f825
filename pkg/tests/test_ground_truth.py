import math

import mpmath as mp
import numpy as np
import pytest

from tempres.errors import DivergentTail
from tempres.ground_truth import (
    value_finite,
    value_finite_scalar,
    value_finite_vector,
    value_infinite_scalar,
    value_infinite_vector,
    value_tail,
    value_tail_scalar,
)
from tempres.system import ScalarSystem, VectorSystem

import oracles

G = math.exp(-1)


class TestScalar:
    def test_figure_instance(self):
        v = value_finite_scalar(ScalarSystem(-1.0), 8.0).value
        assert v == pytest.approx(3.75000002813379368, rel=1e-15)
        assert v == pytest.approx(float(oracles.value_quad(-1, 1, 1, 8)), rel=1e-13)

    def test_brownian(self):
        assert value_finite_scalar(ScalarSystem(0.0), 2.0).value == pytest.approx(2.0, rel=1e-15)

    def test_degenerate_noise(self):
        assert value_finite_scalar(ScalarSystem(-1.0, 0.0), 3.0).value == 0.0
        assert value_tail_scalar(ScalarSystem(-1.0, 0.0), 3.0, 0.5).value == 0.0

    @pytest.mark.parametrize("a", [-2.0, -1.0, -0.1, -1e-9, 0.0])
    @pytest.mark.parametrize("gamma", [1.0, 0.9, G])
    def test_against_quadrature(self, a, gamma):
        ref = float(oracles.value_quad(a, 1.2, 0.7, 3.0, gamma))
        got = value_finite_scalar(ScalarSystem(a, 1.2, 0.7), 3.0, gamma).value
        assert got == pytest.approx(ref, rel=1e-13)

    def test_tail_value(self):
        v = value_tail_scalar(ScalarSystem(-1.0), 2.0, G).value
        assert v == pytest.approx(0.0672545162555286195, rel=1e-14)
        assert v == pytest.approx(float(oracles.tail_quad(-1, 1, 1, 2, mp.e**-1)), rel=1e-12)

    def test_tail_decays_geometrically(self):
        sys = ScalarSystem(-1.0)
        r = value_tail_scalar(sys, 20.0, 0.8).value / value_tail_scalar(sys, 10.0, 0.8).value
        assert r == pytest.approx(0.8**10, rel=1e-3)

    def test_tail_for_brownian_motion_is_finite(self):
        v = value_tail_scalar(ScalarSystem(0.0), 1.0, 0.5).value
        assert v == pytest.approx(float(oracles.tail_quad(0, 1, 1, 1, 0.5, span=120)), rel=1e-12)

    def test_tail_needs_discount(self):
        with pytest.raises(DivergentTail):
            value_tail_scalar(ScalarSystem(-1.0), 1.0, 1.0)

    def test_infinite_value(self):
        v = value_infinite_scalar(ScalarSystem(-1.0), G).value
        # int_0^inf e^{-t} (1 - e^{-2t})/2 dt = 1/3
        assert v == pytest.approx(1 / 3, rel=1e-14)
        ref = float(mp.quad(lambda t: mp.e**-t * oracles.cov(-1, 1, t, t), [0, 40, 80]))
        assert v == pytest.approx(ref, rel=1e-9)


class TestVector:
    def test_embedding_matches_scalar(self):
        sys = VectorSystem([[-0.6]], 1.1, [[2.0]])
        s = ScalarSystem(-0.6, 1.1, 2.0)
        for gamma in (1.0, 0.9):
            assert value_finite_vector(sys, 4.0, gamma).value == pytest.approx(value_finite_scalar(s, 4.0, gamma).value, rel=1e-10)
        assert value_infinite_vector(sys, 0.9).value == pytest.approx(value_infinite_scalar(s, 0.9).value, rel=1e-10)

    def test_decoupled_sum(self):
        v = value_finite_vector(VectorSystem(-np.eye(3)), 8.0).value
        assert v == pytest.approx(3 * 3.75000002813379368, rel=1e-11)

    def test_linear_in_cost(self):
        A = np.array([[-1.0, 0.2], [0.0, -0.7]])
        base = value_finite_vector(VectorSystem(A), 2.0).value
        assert value_finite_vector(VectorSystem(A, 1.0, 1e-3 * np.eye(2)), 2.0).value == pytest.approx(1e-3 * base, rel=1e-12)

    def test_shifted_lyapunov(self):
        assert value_infinite_vector(VectorSystem(-np.eye(2)), G).value == pytest.approx(2 / 3, rel=1e-14)

    def test_tail_is_difference(self):
        A = np.array([[-1.0, 0.4], [0.1, -1.3]])
        sys = VectorSystem(A)
        tail = value_tail(sys, 2.0, 0.8).value
        assert tail == pytest.approx(value_infinite_vector(sys, 0.8).value - value_finite(sys, 2.0, 0.8).value)
        assert tail > 0

    def test_zero_noise(self):
        assert value_infinite_vector(VectorSystem(-np.eye(2), 0.0), 0.5).value == 0.0
