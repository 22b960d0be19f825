"""Independent reference computations for the test-suite.

Nothing here imports the package: each quantity is rebuilt from first
principles in mpmath (50 significant digits) so that agreement with the
library is evidence rather than an echo.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 50


def cov(a, sigma, s, t):
    """E[x(s) x(t)] for dx = a x dt + sigma dW, x(0) = 0."""
    a, s, t = mp.mpf(a), mp.mpf(s), mp.mpf(t)
    lo = min(s, t)
    if a == 0:
        return mp.mpf(sigma) ** 2 * lo
    return mp.mpf(sigma) ** 2 * mp.e ** (a * (s + t)) * -mp.expm1(-2 * a * lo) / (2 * a)


def value_quad(a, sigma, q, T, gamma=1):
    """q int_0^T gamma^t E[x(t)^2] dt by adaptive quadrature."""
    g = mp.mpf(gamma)
    return q * mp.quad(lambda t: g**t * cov(a, sigma, t, t), [0, T])


def tail_quad(a, sigma, q, T, gamma, span=60):
    g = mp.mpf(gamma)
    return q * mp.quad(lambda t: g**t * cov(a, sigma, t, t), [T, T + span / 2, T + span])


def mse_brute(a, sigma, q, T, h, B, gamma=1, infinite=False):
    """Exact MSE from the definition: bias^2 + Var/M with Isserlis' theorem,
    summing every pair of grid points. Use small N only."""
    N = int(mp.nint(mp.mpf(T) / h))
    M = B // N
    h = mp.mpf(T) / N
    g = mp.mpf(gamma)
    t = [k * h for k in range(N)]
    w = [h * g ** t[k] * q for k in range(N)]
    mean = mp.fsum(w[k] * cov(a, sigma, t[k], t[k]) for k in range(N))
    var = mp.fsum(2 * w[k] * w[l] * cov(a, sigma, t[k], t[l]) ** 2 for k in range(N) for l in range(N))
    target = value_quad(a, sigma, q, T, gamma)
    bias = mean - target
    if infinite:
        bias -= tail_quad(a, sigma, q, T, gamma)
    return bias**2 + var / M


def literal_mse(a, sigma, T, h, B):
    """Finite-horizon, undiscounted exact MSE written out literally with exp (no expm1).

    The literal form cancels about 2 log10(1/|ah|) digits, so it runs at 120.
    """
    with mp.workdps(120):
        a, T, h, B = (mp.mpf(x) for x in (a, T, h, B))
        s4 = mp.mpf(sigma) ** 4
        eh, eT = mp.e ** (2 * a * h), mp.e ** (2 * a * T)
        E1 = s4 * (-2 * a * h + eh - 1) ** 2 * (eT - 1) ** 2 / (16 * a**4 * (eh - 1) ** 2)
        E2 = s4 * T * (h * (eT - 1) * (4 * eh + eT + 1) - (eh - 1) * (eh + 4 * eT + 1) * T) / (2 * a**2 * (eh - 1) ** 2)
        return +(E1 + E2 / B)


def marginal_mse(sigma, T, h, B):
    s4 = mp.mpf(sigma) ** 4
    T, h, B = mp.mpf(T), mp.mpf(h), mp.mpf(B)
    return s4 * T**2 * h**2 / 4 + s4 * T**5 / (3 * h * B) + s4 * T**2 * (-2 * T**2 + 2 * h * T - h * h) / (3 * B)


def golden_argmin(f, lo, hi, tol=1e-14):
    """Derivative-free minimiser of a unimodal function on [lo, hi]."""
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    r = (mp.sqrt(5) - 1) / 2
    x1, x2 = hi - r * (hi - lo), lo + r * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - r * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + r * (hi - lo)
            f2 = f(x2)
    return (lo + hi) / 2


def exact_argmin(a, sigma, T, B, lo=1e-3, hi=0.99):
    return golden_argmin(lambda h: literal_mse(a, sigma, T, h, B), lo, hi)
