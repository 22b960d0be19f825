"""Analytic MSE of the Monte-Carlo estimator for scalar Langevin systems.

All expressions take ``q = 1``; the MSE scales with ``q**2``.  The exact
finite-horizon expression has a removable singularity at ``a = 0`` with
fourth-order cancellation, so it is evaluated in mpmath with working
precision raised according to ``|2ah|``.

For vector systems only the leading-order structure
``MSE ~ c_h2 h^2 + c_hB / (h B)`` is provided, fitted against the exact
oracle by :func:`fit_leading_coefficients`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import mpmath
import numpy as np

from ._numerics import extra_precision
from .errors import ConfigError, DivergentTail, IllConditionedFit, NonPositiveParameter
from .ground_truth import value_finite_scalar, value_tail_scalar
from .oracle import mse_exact
from .system import EvalPlan, HorizonMode, ScalarSystem, VectorSystem, build_plan

__all__ = [
    "ApproxMse",
    "LeadingCoefficients",
    "mse_finite_undiscounted",
    "mse_finite_undiscounted_terms",
    "mse_marginal",
    "mse_approx_and_bounds",
    "leading_constants",
    "mse_finite_discounted",
    "discounted_constants",
    "variance_constant",
    "mse_infinite_discounted",
    "small_tail_regime",
    "expected_estimate_discounted",
    "fit_leading_coefficients",
    "mse_for_plan",
]


@dataclass(frozen=True)
class ApproxMse:
    approx: float
    lower: float
    upper: float
    c1: float
    c2: float
    slack: float


@dataclass(frozen=True)
class LeadingCoefficients:
    c_h2: float
    c_hB: float
    fit_residual: float


def _check(h: float, B: float) -> None:
    if not h > 0:
        raise NonPositiveParameter(f"step-size must be positive, got {h}")
    if not B > 0:
        raise NonPositiveParameter(f"budget must be positive, got {B}")


# ---------------------------------------------------------------------------
# finite horizon, undiscounted


def mse_finite_undiscounted_terms(a: float, sigma: float, T: float, h: float) -> tuple[float, float]:
    """``(E1, E2)`` with ``MSE = E1 + E2 / B``.

    ::

        E1 = sigma^4 (-2ah + e^{2ah} - 1)^2 (e^{2aT} - 1)^2 / (16 a^4 (e^{2ah} - 1)^2)
        E2 = sigma^4 T [h (e^{2aT} - 1)(4 e^{2ah} + e^{2aT} + 1)
                        - (e^{2ah} - 1)(e^{2ah} + 4 e^{2aT} + 1) T] / (2 a^2 (e^{2ah} - 1)^2)
    """
    if a == 0:
        s4 = sigma**4
        return s4 * T**2 * h**2 / 4, s4 * T**5 / (3 * h) + s4 * T**2 * (-2 * T**2 + 2 * h * T - h * h) / 3
    with extra_precision(2 * a * h):
        a_, T_, h_ = mpmath.mpf(a), mpmath.mpf(T), mpmath.mpf(h)
        s4 = mpmath.mpf(sigma) ** 4
        u = mpmath.expm1(2 * a_ * h_)  # e^{2ah} - 1
        U = mpmath.expm1(2 * a_ * T_)  # e^{2aT} - 1
        eh, eT = u + 1, U + 1
        E1 = s4 * (u - 2 * a_ * h_) ** 2 * U**2 / (16 * a_**4 * u**2)
        E2 = s4 * T_ * (h_ * U * (4 * eh + eT + 1) - u * (eh + 4 * eT + 1) * T_) / (2 * a_**2 * u**2)
        return float(E1), float(E2)


def mse_finite_undiscounted(a: float, sigma: float, T: float, h: float, B: float) -> float:
    """Exact MSE for ``a <= 0``, ``gamma = 1``, budget ``B`` (``M = B h / T``)."""
    _check(h, B)
    if a > 0:
        raise NonPositiveParameter(f"drift must be non-positive, got {a}")
    E1, E2 = mse_finite_undiscounted_terms(a, sigma, T, h)
    return E1 + E2 / B


def mse_marginal(sigma: float, T: float, h: float, B: float) -> float:
    """MSE for Brownian motion (``a = 0``)::

        sigma^4 T^2 h^2 / 4 + sigma^4 T^5 / (3 h B) + sigma^4 T^2 (-2T^2 + 2hT - h^2) / (3B)
    """
    _check(h, B)
    s4 = sigma**4
    return s4 * T**2 * h**2 / 4 + s4 * T**5 / (3 * h * B) + s4 * T**2 * (-2 * T**2 + 2 * h * T - h * h) / (3 * B)


def leading_constants(a: float, sigma: float, T: float) -> tuple[float, float]:
    """Coefficients ``c1`` of ``h^2`` and ``c2`` of ``1/(hB)`` in the small-h expansion."""
    s4 = sigma**4
    if a == 0:
        return s4 * T**2 / 4, s4 * T**5 / 3
    with extra_precision(2 * a * T):
        a_, T_ = mpmath.mpf(a), mpmath.mpf(T)
        e2 = mpmath.exp(2 * a_ * T_)
        c1 = s4 * mpmath.expm1(2 * a_ * T_) ** 2 / (16 * a_**2)
        c2 = -s4 * T_ * (4 * a_ * T_ - e2**2 + e2 * (8 * a_ * T_ - 4) + 5) / (8 * a_**4)
        return float(c1), float(c2)


def mse_approx_and_bounds(a: float, sigma: float, T: float, h: float, B: float) -> ApproxMse:
    """Leading-order MSE ``c1 h^2 + c2/(hB)`` and the bracket
    ``[approx, 4 c1 h^2 + 2 c2/(hB)]``, the upper end widened by a polynomial slack
    ``(sigma^4 T / B)(32 a^4 T^3 h / 3 + 16 a^4 T^2 h^2)(1 + 1/(8 a^4 h^2))``.
    """
    _check(h, B)
    if a >= 0:
        raise NonPositiveParameter("bounds are stated for strictly stable drift a < 0")
    c1, c2 = leading_constants(a, sigma, T)
    approx = c1 * h**2 + c2 / (h * B)
    a4 = a**4
    slack = (sigma**4 * T / B) * (32 * a4 * T**3 * h / 3 + 16 * a4 * T**2 * h**2) * (1 + 1 / (8 * a4 * h**2))
    upper = 4 * c1 * h**2 + 2 * c2 / (h * B) + slack
    return ApproxMse(approx=approx, lower=approx, upper=upper, c1=c1, c2=c2, slack=slack)


# ---------------------------------------------------------------------------
# discounted


def variance_constant(a: float, gamma: float) -> float:
    """``C(a, gamma) = 1 / (log g (a + log g) (2a + log g)^2)``."""
    if not 0 < gamma < 1:
        raise DivergentTail(f"need 0 < gamma < 1, got {gamma}")
    lg = math.log(gamma)
    if not (a + lg < 0 and 2 * a + lg < 0):
        raise DivergentTail(f"need a + log(gamma) < 0 and 2a + log(gamma) < 0 (a={a}, gamma={gamma})")
    return 1.0 / (lg * (a + lg) * (2 * a + lg) ** 2)


def discounted_constants(a: float, gamma: float, T: float) -> tuple[float, float, float]:
    """``(C1, C2, C3)``: coefficients of ``sigma^4 h^2, h^3, h^4`` in the discounted bias term."""
    if a == 0:
        raise NonPositiveParameter("discounted expansion is stated for a < 0")
    lg = math.log(gamma)
    gT = gamma**T
    e2 = math.exp(2 * a * T)
    em1 = math.expm1(2 * a * T)
    k = e2 * (2 * a + lg) - lg
    C1 = gT**2 * em1**2 / (16 * a**2)
    C2 = gT * em1 * (gT * k - 2 * a) / (48 * a**2)
    C3 = gT * (gT * k**2 - 4 * a * k) / (576 * a**2)
    return C1, C2, C3


def mse_finite_discounted(a: float, sigma: float, T: float, gamma: float, h: float, B: float) -> float:
    """Small-h / large-B expansion for ``gamma < 1`` over ``[0, T]``::

        sigma^4 (C1 h^2 + C2 h^3 + (1/144 + C3) h^4) + sigma^4 T C(a, gamma) / (h B)

    Terms of order ``h^5`` and ``gamma^T / B`` are not represented.
    """
    _check(h, B)
    C = variance_constant(a, gamma)
    C1, C2, C3 = discounted_constants(a, gamma, T)
    s4 = sigma**4
    return s4 * (C1 * h**2 + C2 * h**3 + (1 / 144 + C3) * h**4) + s4 * T * C / (h * B)


def small_tail_regime(gamma: float, T: float, h: float) -> bool:
    """True when ``gamma^T`` is negligible next to ``h^4`` (taken as ``gamma^T < h^4/10``)."""
    return gamma**T < h**4 / 10


def expected_estimate_discounted(a: float, sigma: float, T: float, gamma: float, h: float) -> float:
    """``E[V_hat] = sigma^2 h/(2a) ((1 - g^T e^{2aT})/(1 - g^h e^{2ah}) - (1 - g^T)/(1 - g^h))``."""
    with extra_precision(2 * a * h, math.log(gamma) * h):
        a_, T_, h_ = mpmath.mpf(a), mpmath.mpf(T), mpmath.mpf(h)
        lg = mpmath.log(mpmath.mpf(gamma))
        s2 = mpmath.mpf(sigma) ** 2
        if a == 0:
            # h sum_k g^{kh} k h
            r = mpmath.exp(lg * h_)
            N = int(round(T / h))
            return float(s2 * h_**2 * sum(k * r**k for k in range(N)))
        first = -mpmath.expm1((lg + 2 * a_) * T_) / -mpmath.expm1((lg + 2 * a_) * h_)
        second = -mpmath.expm1(lg * T_) / -mpmath.expm1(lg * h_)
        return float(s2 * h_ / (2 * a_) * (first - second))


def mse_infinite_discounted(
    a: float, sigma: float, T: float, gamma: float, h: float, B: float, regime: str = "auto"
) -> float:
    """Infinite-horizon discounted MSE.

    In the small-tail regime (``gamma^T = o(h^4)``)::

        sigma^4 T C(a, gamma) / (h B) + sigma^4 h^4 / 144

    Otherwise the bias, truncation and cross terms are kept explicitly:
    ``sigma^4 T C / (h B) + (E[V_hat] - V_T - V_{T,inf})^2``.

    ``regime`` is ``"auto"``, ``"small-tail"`` or ``"constant-tail"``.
    """
    _check(h, B)
    C = variance_constant(a, gamma)
    s4 = sigma**4
    variance = s4 * T * C / (h * B)
    if regime == "auto":
        regime = "small-tail" if small_tail_regime(gamma, T, h) else "constant-tail"
    if regime == "small-tail":
        return variance + s4 * h**4 / 144
    if regime != "constant-tail":
        raise ValueError(f"unknown regime {regime!r}")
    sys = ScalarSystem(a, sigma, 1.0)
    v_T = value_finite_scalar(sys, T, gamma).value
    tail = value_tail_scalar(sys, T, gamma).value
    bias = expected_estimate_discounted(a, sigma, T, gamma, h) - v_T
    return variance + (bias - tail) ** 2


def mse_for_plan(sys: ScalarSystem, plan: EvalPlan) -> float:
    """Closed-form MSE of the estimator described by ``plan``.

    The budget is taken as ``M N`` (samples actually used), so that the
    value refers to the same estimator the exact oracle and the sampler see.
    Finite discounted and infinite-horizon values are the asymptotic
    expansions above; the finite undiscounted value is exact.
    """
    if not isinstance(sys, ScalarSystem):
        raise ConfigError("closed-form MSE is available for scalar systems only")
    B_eff = plan.samples_used
    q2 = sys.q**2
    if plan.mode is HorizonMode.FINITE_UNDISCOUNTED:
        return q2 * mse_finite_undiscounted(sys.a, sys.sigma, plan.T, plan.h, B_eff)
    if plan.mode is HorizonMode.FINITE_DISCOUNTED:
        return q2 * mse_finite_discounted(sys.a, sys.sigma, plan.T, plan.gamma, plan.h, B_eff)
    return q2 * mse_infinite_discounted(sys.a, sys.sigma, plan.T, plan.gamma, plan.h, B_eff)


# ---------------------------------------------------------------------------
# vector systems: fitted leading order


def fit_leading_coefficients(sys: VectorSystem | ScalarSystem, T: float, budgets, h_grid) -> LeadingCoefficients:
    """Least-squares fit of the exact MSE to ``c_h2 h^2 + c_hB / (h B)``.

    ``fit_residual`` is ``||X c - y|| / ||y||`` over the product grid
    ``budgets x h_grid``.  The conditioning check uses column-normalised
    regressors so that it does not depend on the units of ``h``.
    """
    rows, target = [], []
    for B, h in product(budgets, h_grid):
        plan = build_plan(h, int(B), T)
        rows.append([plan.h**2, 1.0 / (plan.h * B)])
        target.append(mse_exact(sys, plan).total)
    X = np.asarray(rows)
    y = np.asarray(target)
    norms = np.linalg.norm(X, axis=0)
    cond = np.linalg.cond(X / np.where(norms > 0, norms, 1.0))
    if not np.isfinite(cond) or cond > 1e8:
        raise IllConditionedFit(f"design matrix condition number {cond:.3e}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = np.linalg.norm(X @ coef - y) / np.linalg.norm(y)
    return LeadingCoefficients(float(coef[0]), float(coef[1]), float(resid))
