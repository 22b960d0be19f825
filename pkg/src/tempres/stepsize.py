"""Choosing the step-size for a fixed data budget.

Several routes are offered, from cheapest to most faithful:

* closed-form balances of the leading ``h^2`` and ``1/(hB)`` terms
  (:func:`hstar_marginal`, :func:`hstar_leading`, :func:`hstar_infinite`);
* the cubic obtained by keeping one more order in ``h``
  (:func:`hstar_refined`) and the stationarity polynomial of the exact
  finite-horizon MSE (:func:`hstar_poly_root`);
* exhaustive search over admissible step-sizes ``T/m`` with any MSE
  evaluator (:func:`hstar_grid`), which is the authoritative answer.

:func:`extrapolate_budget` carries a few pilot optima to a larger budget
using the known exponent of ``B``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import bisect

from ._numerics import extra_precision
from .closed_form import (
    leading_constants,
    mse_finite_undiscounted,
    mse_infinite_discounted,
    mse_for_plan,
    mse_marginal,
    small_tail_regime,
    variance_constant,
)
from .errors import ConfigError, DegeneratePilot, NoRootInInterval, NonPositiveParameter
from .ground_truth import value_finite, value_infinite
from .monte_carlo import empirical_mse
from .oracle import MAX_GRID, mse_exact
from .system import HorizonMode, ScalarSystem, VectorSystem, build_plan

__all__ = [
    "StepMethod",
    "StepSizeRecommendation",
    "BudgetScalingFit",
    "hstar_marginal",
    "optimal_episodes",
    "hstar_leading",
    "hstar_refined",
    "stationarity_polynomial",
    "hstar_poly_root",
    "hstar_infinite",
    "grid_curve",
    "hstar_grid",
    "extrapolate_budget",
]


class StepMethod(str, enum.Enum):
    MARGINAL = "marginal-closed"
    LEADING = "leading-order"
    REFINED = "cubic-refined"
    POLY_ROOT = "poly-root"
    GRID = "grid-argmin"
    INFINITE = "infinite-leading"
    EXTRAPOLATED = "extrapolated"


@dataclass(frozen=True)
class StepSizeRecommendation:
    h_star: float
    method: StepMethod
    predicted_mse: float | None
    episodes: float  # B h*/T; an integer count for grid-argmin
    bracket: tuple[float, float] | None = None
    flags: tuple[str, ...] = ()
    alternatives: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BudgetScalingFit:
    coefficient: float
    exponent: float
    pilot_budgets: tuple[float, ...]
    fit_residual: float  # RMS misfit of log h*

    def predict(self, B: float) -> float:
        return self.coefficient * float(B) ** self.exponent


def _check_budget(B: float) -> None:
    if not B >= 1:
        raise NonPositiveParameter(f"budget must be at least 1, got {B}")


def _check_stable(a: float) -> None:
    if not a < 0:
        raise NonPositiveParameter(f"this step-size formula needs a < 0, got a = {a}")


# ---------------------------------------------------------------------------
# closed-form balances


def optimal_episodes(T: float, B: float) -> float:
    """Episode count ``(2/3)^{1/3} B^{2/3}`` at the Brownian optimum (independent of T)."""
    _check_budget(B)
    return (2.0 / 3.0) ** (1.0 / 3.0) * float(B) ** (2.0 / 3.0)


def hstar_marginal(T: float, B: float, sigma: float = 1.0) -> StepSizeRecommendation:
    """Brownian motion (``a = 0``): ``h* = T (2/(3B))^{1/3}``."""
    _check_budget(B)
    h = T * (2.0 / (3.0 * B)) ** (1.0 / 3.0)
    M = optimal_episodes(T, B)
    flags = ("infeasible-episodes",) if M < 1 else ()
    return StepSizeRecommendation(h, StepMethod.MARGINAL, mse_marginal(sigma, T, h, B), M, flags=flags)


def hstar_leading(a: float, sigma: float, T: float, B: float) -> StepSizeRecommendation:
    """Balance ``c1 h^2`` against ``c2/(hB)``: ``h* = (c2 / (2 c1 B))^{1/3}``."""
    _check_budget(B)
    _check_stable(a)
    c1, c2 = leading_constants(a, 1.0, T)
    h = (c2 / (2.0 * c1 * B)) ** (1.0 / 3.0)
    return StepSizeRecommendation(h, StepMethod.LEADING, mse_finite_undiscounted(a, sigma, T, h, B), B * h / T)


def _d_coefficients(a: float, T: float, B: float):
    a_, T_ = mpmath.mpf(a), mpmath.mpf(T)
    e2 = mpmath.exp(2 * a_ * T_)
    e4 = e2**2
    aT = a_ * T_
    D1 = T_ * (1 + 4 * aT + e2 * (8 * aT + 4) - 5 * e4)
    D2 = T_ * (4 * aT - e4 + e2 * (8 * aT - 4) + 5)
    D3 = 3 * B * mpmath.expm1(2 * aT) ** 2 - 4 * aT * mpmath.expm1(4 * aT)
    return D1, D2, D3


def _real_cbrt(x):
    return mpmath.sign(x) * abs(x) ** (mpmath.mpf(1) / 3)


def hstar_refined(a: float, sigma: float, T: float, B: float) -> StepSizeRecommendation:
    """Minimiser of the MSE expansion truncated one order beyond the leading terms.

    The stationarity condition is the cubic ``a^2 D3 h^3 - a^2 D1 h^2 + 3 D2 = 0``,
    solved by Cardano's formula.  When the discriminant is negative (small
    budgets) the leading-order value is returned with the flag
    ``"complex-branch"``.
    """
    _check_budget(B)
    _check_stable(a)
    with extra_precision(2 * a * T):
        D1, D2, D3 = _d_coefficients(a, T, B)
        a2 = mpmath.mpf(a) ** 2
        p = D1 / (3 * D3)
        base = p**3 - 3 * D2 / (2 * a2 * D3)
        disc = 9 * D2**2 / (4 * a2**2 * D3**2) - D1**3 * D2 / (9 * a2 * D3**4)
        if disc < 0:
            lead = hstar_leading(a, sigma, T, B)
            return StepSizeRecommendation(
                lead.h_star, StepMethod.REFINED, lead.predicted_mse, lead.episodes, flags=("complex-branch",)
            )
        root = mpmath.sqrt(disc)
        h = float(p + _real_cbrt(base - root) + _real_cbrt(base + root))
    return StepSizeRecommendation(h, StepMethod.REFINED, mse_finite_undiscounted(a, sigma, T, h, B), B * h / T)


def stationarity_polynomial(a: float, T: float, B: float) -> np.ndarray:
    """Coefficients ``[p0, p1, p2, p3]`` (ascending powers of ``h``) of the
    simplified condition ``d MSE / dh = 0`` for the finite undiscounted case::

        K1 (9aTh + 3T) + 2 a^2 T K2 h^2 + a^2 h^3 (3B (e^{2aT} - 1)^2 + aT K3) = 0

    with ``K1 = 5 + 4aT - e^{2aT}(4 + e^{2aT} - 8aT)``,
    ``K2 = 37 - 5e^{4aT} + 28aT + 56aT e^{2aT} - 32e^{2aT}`` and
    ``K3 = 91 - 7e^{4aT} + 60aT + 120aT e^{2aT} - 84e^{2aT}``.
    """
    with extra_precision(2 * a * T):
        a_, T_ = mpmath.mpf(a), mpmath.mpf(T)
        aT = a_ * T_
        e2 = mpmath.exp(2 * aT)
        e4 = e2**2
        K1 = 5 + 4 * aT - e2 * (4 + e2 - 8 * aT)
        K2 = 37 - 5 * e4 + 28 * aT + 56 * aT * e2 - 32 * e2
        K3 = 91 - 7 * e4 + 60 * aT + 120 * aT * e2 - 84 * e2
        coeffs = [
            3 * T_ * K1,
            9 * aT * K1,
            2 * a_**2 * T_ * K2,
            a_**2 * (3 * B * mpmath.expm1(2 * aT) ** 2 + aT * K3),
        ]
        return np.array([float(c) for c in coeffs])


def hstar_poly_root(a: float, sigma: float, T: float, B: float, eps: float = 1e-9, xtol: float = 1e-12) -> StepSizeRecommendation:
    """Root of :func:`stationarity_polynomial` in ``(eps, 1)`` by bisection.

    Raises
    ------
    NoRootInInterval
        If the polynomial has the same sign at both ends; fall back to
        :func:`hstar_grid` in that case.
    """
    _check_budget(B)
    _check_stable(a)
    poly = np.polynomial.Polynomial(stationarity_polynomial(a, T, B))
    lo, hi = poly(eps), poly(1.0)
    if np.sign(lo) == np.sign(hi):
        raise NoRootInInterval(f"stationarity polynomial has no sign change on ({eps}, 1): p(eps)={lo:.3e}, p(1)={hi:.3e}")
    h = bisect(poly, eps, 1.0, xtol=min(xtol, 1e-14), maxiter=200)
    return StepSizeRecommendation(h, StepMethod.POLY_ROOT, mse_finite_undiscounted(a, sigma, T, h, B), B * h / T)


def hstar_infinite(a: float, gamma: float, T: float, B: float, sigma: float = 1.0) -> StepSizeRecommendation:
    """``h* = (36 T C(a, gamma) / B)^{1/5}`` for the discounted infinite-horizon value.

    The flag reports the regime judged at ``h*``: ``"small-tail"`` when
    ``gamma^T < h*^4 / 10``, otherwise ``"constant-tail"``; in the latter case
    the bias-variance balance changes and ``alternatives["constant-tail"]``
    holds the order-of-magnitude choice ``B^{-1/2}``.
    """
    _check_budget(B)
    C = variance_constant(a, gamma)
    h = (36.0 * T * C / B) ** 0.2
    small = small_tail_regime(gamma, T, h)
    regime = "small-tail" if small else "constant-tail"
    mse = mse_infinite_discounted(a, sigma, T, gamma, h, B, regime="small-tail" if small else "constant-tail")
    return StepSizeRecommendation(
        h, StepMethod.INFINITE, mse, B * h / T, flags=(regime,), alternatives={"constant-tail": float(B) ** -0.5}
    )


# ---------------------------------------------------------------------------
# exhaustive search


def _evaluator(name: str, sys, T: float, gamma: float, mode: HorizonMode, replicates: int, seed: int, workers):
    if name == "closed-form":
        return lambda plan: mse_for_plan(sys, plan)
    if name == "exact-oracle":
        return lambda plan: mse_exact(sys, plan).total
    if name == "empirical":
        target = value_finite(sys, T, gamma).value if mode.is_finite else value_infinite(sys, gamma).value
        return lambda plan: empirical_mse(sys, plan, target, replicates, seed, workers).mean
    raise ConfigError(f"unknown evaluator {name!r}; expected closed-form, exact-oracle or empirical")


def grid_curve(
    sys: ScalarSystem | VectorSystem,
    T: float,
    B: int,
    gamma: float = 1.0,
    mode="finite-undiscounted",
    evaluator: str = "exact-oracle",
    m_max: int | None = None,
    replicates: int = 50,
    seed: int = 0,
    workers: int | None = None,
) -> list[tuple[int, float, float]]:
    """``(m, h, mse)`` for ``h = T/m``, ``m = 1..m_max``."""
    mode = HorizonMode.parse(mode)
    B = int(B)
    m_max = min(B, MAX_GRID) if m_max is None else int(m_max)
    if not 1 <= m_max <= B:
        raise ConfigError(f"m_max must lie in [1, B], got {m_max}")
    f = _evaluator(evaluator, sys, T, gamma, mode, replicates, seed, workers)
    out = []
    for m in range(1, m_max + 1):
        plan = build_plan(T / m, B, T, gamma, mode)
        out.append((m, plan.h, float(f(plan))))
    return out


def hstar_grid(
    sys: ScalarSystem | VectorSystem,
    T: float,
    B: int,
    gamma: float = 1.0,
    mode="finite-undiscounted",
    evaluator: str = "exact-oracle",
    m_max: int | None = None,
    replicates: int = 50,
    seed: int = 0,
    workers: int | None = None,
) -> StepSizeRecommendation:
    """Argmin of ``evaluator`` over ``h = T/m``.

    Values within a relative ``1e-12`` of each other count as ties and are
    resolved toward the larger step-size.  ``bracket`` holds the neighbouring
    grid step-sizes.
    """
    curve = grid_curve(sys, T, B, gamma, mode, evaluator, m_max, replicates, seed, workers)
    best = 0
    for i, (_, _, v) in enumerate(curve):
        if v < curve[best][2] * (1 - 1e-12):
            best = i
    m, h, v = curve[best]
    lo = curve[best + 1][1] if best + 1 < len(curve) else h
    hi = curve[best - 1][1] if best > 0 else h
    flags = ("at-grid-edge",) if best + 1 == len(curve) and len(curve) > 1 else ()
    return StepSizeRecommendation(h, StepMethod.GRID, v, int(B) // m, bracket=(lo, hi), flags=flags)


# ---------------------------------------------------------------------------
# budget extrapolation


def extrapolate_budget(pilot, mode="finite-undiscounted") -> BudgetScalingFit:
    """Fit ``h* = c B^{p}`` to pilot optima with the exponent fixed by the horizon.

    ``p = -1/3`` for the finite modes and ``-1/5`` for the infinite horizon;
    ``log c`` is the least-squares intercept of ``log h* - p log B``.
    """
    mode = HorizonMode.parse(mode)
    pts = [(float(B), float(h)) for B, h in pilot]
    if len(pts) < 2 or len({B for B, _ in pts}) < 2:
        raise DegeneratePilot("need pilot optima at two or more distinct budgets")
    if any(B <= 0 or h <= 0 for B, h in pts):
        raise DegeneratePilot("pilot budgets and step-sizes must be positive")
    p = -1.0 / 3.0 if mode.is_finite else -0.2
    logs = np.array([math.log(h) - p * math.log(B) for B, h in pts])
    log_c = float(np.mean(logs))
    resid = float(np.sqrt(np.mean((logs - log_c) ** 2)))
    return BudgetScalingFit(math.exp(log_c), p, tuple(B for B, _ in pts), resid)
