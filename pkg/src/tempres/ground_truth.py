"""Expected costs the estimator is measured against.

``V_T`` is the expected discounted cost over ``[0, T]``, ``V_{T,inf}`` the tail
beyond ``T`` and ``V_inf = V_T + V_{T,inf}``.  Scalar values are closed forms
evaluated in extended precision so that drifts close to zero do not lose
digits to cancellation; vector values use quadrature of the exact Gramian or
a shifted Lyapunov equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss

from ._numerics import extra_precision
from .errors import DivergentTail, NonPositiveParameter, QuadratureFailure
from .gaussian_process import gramian, lyapunov_solve
from .system import ScalarSystem, VectorSystem

__all__ = [
    "ValueResult",
    "value_finite_scalar",
    "value_tail_scalar",
    "value_infinite_scalar",
    "value_finite_vector",
    "value_infinite_vector",
    "value_finite",
    "value_tail",
    "value_infinite",
]


@dataclass(frozen=True)
class ValueResult:
    value: float
    method: str  # "closed-form" | "lyapunov" | "quadrature"
    est_abs_error: float

    def __float__(self) -> float:
        return self.value


def _closed(value) -> ValueResult:
    v = float(value)
    return ValueResult(v, "closed-form", 4 * np.finfo(float).eps * max(1.0, abs(v)))


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma <= 1.0:
        raise NonPositiveParameter(f"gamma must lie in (0, 1], got {gamma}")
    return gamma


def _check_tail(a: float, gamma: float) -> None:
    if gamma >= 1.0:
        raise DivergentTail("the tail beyond T is infinite without discounting")
    lg = math.log(gamma)
    if not (a + lg < 0 and 2 * a + lg < 0):
        raise DivergentTail(f"need a + log(gamma) < 0 and 2a + log(gamma) < 0 (a={a}, log gamma={lg})")


def _mp_finite(a, sigma2, T, gamma):
    a, T = mpmath.mpf(a), mpmath.mpf(T)
    if gamma == 1.0:
        if a == 0:
            return sigma2 * T**2 / 2
        return sigma2 / (2 * a) * (mpmath.expm1(2 * a * T) / (2 * a) - T)
    lg = mpmath.log(mpmath.mpf(gamma))
    gT = mpmath.exp(lg * T)
    if a == 0:
        # int_0^T t gamma^t dt
        return sigma2 * (gT * (lg * T - 1) + 1) / lg**2
    return sigma2 / (2 * a) * (
        (gT * mpmath.exp(2 * a * T) - 1) / (lg + 2 * a) - (gT - 1) / lg
    )


def value_finite_scalar(sys: ScalarSystem, T: float, gamma: float = 1.0) -> ValueResult:
    """``V_T = q int_0^T gamma^t E[x(t)^2] dt`` in closed form."""
    if T <= 0:
        raise NonPositiveParameter(f"horizon must be positive, got {T}")
    gamma = _check_gamma(gamma)
    lg = math.log(gamma)
    with extra_precision(2 * sys.a * T, lg * T):
        v = sys.q * _mp_finite(sys.a, mpmath.mpf(sys.sigma) ** 2, T, gamma)
    return _closed(v)


def value_tail_scalar(sys: ScalarSystem, T: float, gamma: float) -> ValueResult:
    """``V_{T,inf} = q sigma^2 gamma^T/(2a) (1/log g - e^{2aT}/(log g + 2a))``."""
    gamma = _check_gamma(gamma)
    _check_tail(sys.a, gamma)
    with extra_precision(2 * sys.a * T):
        a, T_ = mpmath.mpf(sys.a), mpmath.mpf(T)
        lg = mpmath.log(mpmath.mpf(gamma))
        gT = mpmath.exp(lg * T_)
        s2 = mpmath.mpf(sys.sigma) ** 2
        if a == 0:
            v = s2 * gT * (1 - lg * T_) / lg**2
        else:
            v = s2 * gT / (2 * a) * (1 / lg - mpmath.exp(2 * a * T_) / (lg + 2 * a))
        v *= sys.q
    return _closed(v)


def value_infinite_scalar(sys: ScalarSystem, gamma: float, T_check: tuple[float, float] = (1.0, 5.0)) -> ValueResult:
    """``V_inf`` as ``V_T + V_{T,inf}``, cross-checked at two horizons."""
    gamma = _check_gamma(gamma)
    _check_tail(sys.a, gamma)
    vals = [value_finite_scalar(sys, T, gamma).value + value_tail_scalar(sys, T, gamma).value for T in T_check]
    spread = abs(vals[0] - vals[1])
    if spread > 1e-10 * max(1.0, abs(vals[0])):
        raise ArithmeticError(f"horizon decomposition inconsistent by {spread:.3e}")
    return ValueResult(vals[0], "closed-form", max(spread, 4 * np.finfo(float).eps * max(1.0, abs(vals[0]))))


def _gl_integral(f, T: float, panels: int, nodes: np.ndarray, weights: np.ndarray) -> float:
    edges = np.linspace(0.0, T, panels + 1)
    total = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        x = lo + half * (nodes + 1.0)
        total.extend((half * weights * np.array([f(xi) for xi in x])).tolist())
    return math.fsum(total)


def value_finite_vector(sys: VectorSystem, T: float, gamma: float = 1.0, rtol: float = 1e-11, max_panels: int = 512) -> ValueResult:
    """``int_0^T gamma^t tr(Q Sigma(t)) dt`` by composite 32-point Gauss-Legendre.

    Panels are doubled until two successive estimates agree to ``rtol``.
    Results are memoised on the system's arrays, so repeated calls from a
    step-size search cost nothing.
    """
    if T <= 0:
        raise NonPositiveParameter(f"horizon must be positive, got {T}")
    gamma = _check_gamma(gamma)
    key = (sys.A.tobytes(), sys.Q.tobytes(), sys.A.shape, float(sys.sigma))
    return _finite_vector_cached(key, float(T), gamma, float(rtol), int(max_panels))


@lru_cache(maxsize=256)
def _finite_vector_cached(key, T, gamma, rtol, max_panels) -> ValueResult:
    A_raw, Q_raw, shape, sigma = key
    sys = VectorSystem(np.frombuffer(A_raw).reshape(shape), sigma, np.frombuffer(Q_raw).reshape(shape))
    nodes, weights = leggauss(32)
    Q = sys.Q

    def f(t):
        return gamma**t * float(np.sum(Q * gramian(sys, t)))

    panels = 1
    prev = _gl_integral(f, T, panels, nodes, weights)
    while panels < max_panels:
        panels *= 2
        cur = _gl_integral(f, T, panels, nodes, weights)
        diff = abs(cur - prev)
        if diff <= rtol * max(abs(cur), 1e-300) or cur == prev:
            return ValueResult(cur, "quadrature", max(diff, 4 * np.finfo(float).eps * abs(cur)))
        prev = cur
    raise QuadratureFailure(f"Gauss-Legendre did not converge with {max_panels} panels")


def value_infinite_vector(sys: VectorSystem, gamma: float) -> ValueResult:
    """``int_0^inf gamma^t tr(Q Sigma(t)) dt`` through a shifted Lyapunov equation.

    Exchanging the order of integration gives
    ``int_0^inf gamma^t Sigma(t) dt = P_g / (-log gamma)`` where
    ``(A + c I) P_g + P_g (A + c I)' + sigma^2 I = 0`` and ``c = log(gamma)/2``.
    """
    gamma = _check_gamma(gamma)
    if gamma >= 1.0:
        raise DivergentTail("infinite-horizon value needs gamma < 1")
    c = 0.5 * math.log(gamma)
    if sys.spectral_abscissa + c >= 0:
        raise DivergentTail("discount does not dominate the slowest mode")
    n = sys.n
    P = lyapunov_solve(sys.A + c * np.eye(n), sys.sigma**2 * np.eye(n))
    v = float(np.sum(sys.Q * P)) / -math.log(gamma)
    return ValueResult(v, "lyapunov", 1e-12 * max(1.0, abs(v)))


# dispatch helpers used by the oracle and the sweep


def value_finite(sys, T: float, gamma: float = 1.0) -> ValueResult:
    if isinstance(sys, ScalarSystem):
        return value_finite_scalar(sys, T, gamma)
    return value_finite_vector(sys, T, gamma)


def value_infinite(sys, gamma: float) -> ValueResult:
    if isinstance(sys, ScalarSystem):
        return value_infinite_scalar(sys, gamma)
    return value_infinite_vector(sys, gamma)


def value_tail(sys, T: float, gamma: float) -> ValueResult:
    if isinstance(sys, ScalarSystem):
        return value_tail_scalar(sys, T, gamma)
    inf = value_infinite_vector(sys, gamma)
    fin = value_finite_vector(sys, T, gamma)
    return ValueResult(inf.value - fin.value, "quadrature", inf.est_abs_error + fin.est_abs_error)
