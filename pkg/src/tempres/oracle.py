"""Exact MSE of the Monte-Carlo estimator by Gaussian covariance algebra.

For jointly Gaussian zero-mean vectors, Isserlis' theorem gives

    Cov(X_k' Q X_k, X_l' Q X_l) = 2 tr(Q C_kl Q C_kl'),   C_kl = E[X_k X_l'],

so the variance of the Riemann sum is a double sum over the sampling grid of
known covariances.  Nothing here uses the closed-form MSE expressions, which
makes this module the reference they are checked against.

Sums are accumulated with :func:`math.fsum`; the result is correctly rounded
and therefore independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ._numerics import kahan_sum
from .gaussian_process import cov_pair, grid_covariances, second_moment
from .ground_truth import value_finite, value_tail
from .system import EvalPlan, HorizonMode, ScalarSystem, VectorSystem

__all__ = [
    "MseBreakdown",
    "estimator_mean",
    "estimator_variance_single",
    "mse_exact",
    "mse_exact_scaled",
    "MAX_GRID",
]

# desk-scale cap on samples per trajectory (the double sum is O(N^2))
MAX_GRID = 2000


@dataclass(frozen=True)
class MseBreakdown:
    bias_sq: float
    variance_over_M: float
    truncation_sq: float
    cross_term: float
    total: float

    def scaled(self, factor: float) -> "MseBreakdown":
        return MseBreakdown(*(getattr(self, f.name) * factor for f in fields(self)))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _check_grid(plan: EvalPlan) -> None:
    if plan.N > MAX_GRID:
        raise ValueError(f"N = {plan.N} exceeds the exact-oracle cap of {MAX_GRID} samples per trajectory")


def _discount(plan: EvalPlan) -> np.ndarray:
    return plan.gamma ** (np.arange(plan.N) * plan.h)


def estimator_mean(sys: ScalarSystem | VectorSystem, plan: EvalPlan) -> float:
    """E[J_hat(h)] = h sum_k gamma^{t_k} tr(Q Sigma(t_k))."""
    t = np.arange(plan.N) * plan.h
    w = plan.h * _discount(plan)
    if isinstance(sys, ScalarSystem):
        return kahan_sum(w * sys.q * second_moment(sys, t))
    gram, _ = grid_covariances(sys, plan.h, plan.N)
    return kahan_sum(w * np.einsum("ij,kji->k", sys.Q, gram))


def _variance_scalar(sys: ScalarSystem, plan: EvalPlan) -> float:
    t = np.arange(plan.N) * plan.h
    C = cov_pair(sys, t[:, None], t[None, :])
    g = _discount(plan)
    terms = 2.0 * (sys.q * plan.h) ** 2 * np.outer(g, g) * C**2
    return kahan_sum(terms.sum(axis=1))


def _lag_factors(sys: ScalarSystem | VectorSystem, plan: EvalPlan):
    """``U_k = Sigma_k Q Sigma_k`` and ``R_d = (Phi^d)' Q Phi^d`` on the grid."""
    N, h = plan.N, plan.h
    if isinstance(sys, ScalarSystem):
        S = second_moment(sys, np.arange(N) * h)
        U = (sys.q * S**2)[:, None, None]
        R = (sys.q * np.exp(2 * sys.a * h * np.arange(N)))[:, None, None]
        return U, R
    gram, powers = grid_covariances(sys, h, N)
    Q = sys.Q
    U = gram @ Q[None] @ gram
    R = np.swapaxes(powers, 1, 2) @ Q[None] @ powers
    return U, R


def _variance_pairwise(sys, plan: EvalPlan) -> float:
    if isinstance(sys, ScalarSystem):
        return _variance_scalar(sys, plan)
    N, h = plan.N, plan.h
    U, R = _lag_factors(sys, plan)
    # C(t_k, t_{k+d}) = Sigma_k (Phi^d)';  tr(Q C Q C') = tr(R_d U_k)
    term = np.einsum("dij,kij->kd", R, U)
    k = np.arange(N)[:, None]
    d = np.arange(N)[None, :]
    inside = k + d < N
    mult = np.where(d > 0, 2.0, 1.0)
    g = plan.gamma ** ((2 * k + d) * h)
    terms = np.where(inside, 2.0 * h**2 * mult * g * term, 0.0)
    return kahan_sum(terms.sum(axis=1))


def _variance_lagged(sys, plan: EvalPlan) -> float:
    # group the double sum by lag d:  sum_d mult_d gamma^{dh} tr(R_d W_{N-d}),
    # W_j = sum_{k<j} gamma^{2kh} U_k  (prefix sums)
    N, h = plan.N, plan.h
    U, R = _lag_factors(sys, plan)
    k = np.arange(N)
    W = np.cumsum(plan.gamma ** (2 * k * h)[:, None, None] * U, axis=0)
    W_lag = W[N - 1 - k]  # W_{N-d} holds k = 0 .. N-1-d
    per_lag = np.einsum("dij,dij->d", R, W_lag)
    mult = np.where(k > 0, 2.0, 1.0)
    return kahan_sum(2.0 * h**2 * mult * plan.gamma ** (k * h) * per_lag)


def estimator_variance_single(sys: ScalarSystem | VectorSystem, plan: EvalPlan, method: str = "lagged") -> float:
    """Var(J_hat(h)) for a single trajectory.

    ``method="pairwise"`` sums all ``N^2`` Isserlis terms; ``"lagged"`` (the
    default) regroups the same sum by lag with prefix sums, costing ``O(N)``.
    """
    _check_grid(plan)
    if method == "pairwise":
        return _variance_pairwise(sys, plan)
    if method == "lagged":
        return _variance_lagged(sys, plan)
    raise ValueError(f"unknown method {method!r}")


def mse_exact(sys: ScalarSystem | VectorSystem, plan: EvalPlan) -> MseBreakdown:
    """E[(V_hat_M(h) - V)^2] with ``V = V_T`` (finite modes) or ``V_inf``."""
    _check_grid(plan)
    mean = estimator_mean(sys, plan)
    var = estimator_variance_single(sys, plan) / plan.M
    v_T = value_finite(sys, plan.T, plan.gamma).value
    bias = mean - v_T
    if plan.mode is HorizonMode.INFINITE_DISCOUNTED:
        tail = value_tail(sys, plan.T, plan.gamma).value
        trunc = tail**2
        cross = -2.0 * bias * tail
    else:
        trunc = cross = 0.0
    bias_sq = bias**2
    return MseBreakdown(bias_sq, var, trunc, cross, kahan_sum([bias_sq, var, trunc, cross]))


def mse_exact_scaled(sys: ScalarSystem | VectorSystem, plan: EvalPlan, q_scale: float) -> MseBreakdown:
    """Breakdown for the cost weight scaled by ``q_scale`` (every term scales by ``q_scale**2``)."""
    if q_scale <= 0:
        raise ValueError(f"q_scale must be positive, got {q_scale}")
    return mse_exact(sys, plan).scaled(q_scale**2)
