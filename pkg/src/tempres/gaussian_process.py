"""Moments and covariance kernels of the Langevin process started at zero.

Scalar formulas are written in terms of ``phi1(z) = (e^z - 1)/z`` so the same
expression covers ``a < 0`` and the Brownian limit ``a = 0`` without a branch.
Scalar routines broadcast over array arguments.

For matrices, the state covariance ``Sigma(t) = int_0^t e^{Au} sigma^2 e^{A'u} du``
comes from the stationary Gramian ``P`` (``A P + P A' + sigma^2 I = 0``) as
``P - e^{At} P e^{A't}`` when ``A`` is strictly stable, and from adaptive
quadrature otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy import integrate

from ._numerics import phi1
from .errors import QuadratureFailure, SingularLyapunov
from .system import ScalarSystem, VectorSystem

__all__ = [
    "TransitionLaw",
    "second_moment",
    "fourth_moment",
    "cross_moment",
    "cov_pair",
    "matrix_exponential",
    "lyapunov_solve",
    "stationary_gramian",
    "gramian",
    "cov_matrix",
    "grid_covariances",
    "transition",
]

QUAD_ATOL = 1e-12
LYAPUNOV_RTOL = 1e-10


# ---------------------------------------------------------------------------
# scalar process


def second_moment(sys: ScalarSystem, t):
    """E[x(t)^2] = sigma^2 (e^{2at} - 1) / (2a); sigma^2 t when a = 0."""
    t = np.asarray(t, dtype=float)
    return sys.sigma**2 * t * phi1(2 * sys.a * t)


def fourth_moment(sys: ScalarSystem, t):
    """E[x(t)^4] = 3 sigma^4 (e^{2at} - 1)^2 / (4 a^2)."""
    t = np.asarray(t, dtype=float)
    return 3.0 * (sys.sigma**2 * t * phi1(2 * sys.a * t)) ** 2


def cross_moment(sys: ScalarSystem, s, t):
    """E[x(s)^2 x(t)^2], symmetric in its arguments.

    For ``s <= t`` this is
    ``sigma^4/(4a^2) (e^{2as} - 1) e^{2at} {(e^{-2as} - e^{-2at}) + 3(1 - e^{-2as})}``,
    rearranged so that it stays finite at ``a = 0`` where it equals
    ``sigma^4 s (t + 2s)``.
    """
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    a = sys.a
    gap = hi - lo
    early = lo * phi1(2 * a * lo)
    out = sys.sigma**4 * early * (gap * phi1(2 * a * gap) + 3.0 * np.exp(2 * a * gap) * early)
    return out[()] if out.ndim == 0 else out


def cov_pair(sys: ScalarSystem, s, t):
    """E[x(s) x(t)] = sigma^2 e^{a(s+t)} (1 - e^{-2a min(s,t)}) / (2a)."""
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    lo = np.minimum(s, t)
    out = np.exp(sys.a * np.abs(t - s)) * second_moment(sys, lo)
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# dense linear algebra


def matrix_exponential(A, t: float = 1.0) -> np.ndarray:
    """exp(A t) by Pade-13 scaling and squaring."""
    A = np.asarray(A, dtype=float)
    return scipy.linalg.expm(A * float(t))


def lyapunov_solve(A, W) -> np.ndarray:
    """Solve ``A P + P A' + W = 0`` through the Kronecker-vectorised system

        (I kron A + A kron I) vec(P) = -vec(W)

    Parameters
    ----------
    A : (n, n) array_like
        Stable matrix.
    W : (n, n) array_like
        Symmetric right-hand side.

    Raises
    ------
    SingularLyapunov
        If some pair of eigenvalues satisfies ``lambda_i + lambda_j = 0``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    n = A.shape[0]
    eig = np.linalg.eigvals(A)
    pair = np.abs(eig[:, None] + eig[None, :]).min()
    scale = max(1.0, np.abs(eig).max())
    if pair <= 1e-13 * scale:
        raise SingularLyapunov(f"lambda_i + lambda_j vanishes (min |sum| = {pair:.3e})")
    eye = np.eye(n)
    K = np.kron(eye, A) + np.kron(A, eye)
    # column-major vec to match the Kronecker identity
    vec = np.linalg.solve(K, -W.reshape(-1, order="F"))
    P = vec.reshape((n, n), order="F")
    if np.allclose(W, W.T):
        P = 0.5 * (P + P.T)
    resid = np.linalg.norm(A @ P + P @ A.T + W)
    if resid > LYAPUNOV_RTOL * max(np.linalg.norm(P), 1e-300) and resid > 1e-14 * np.linalg.norm(W):
        raise SingularLyapunov(f"Lyapunov residual {resid:.3e} too large; system ill-conditioned")
    return P


def _key(sys: VectorSystem):
    return (sys.A.tobytes(), sys.A.shape, float(sys.sigma))


@lru_cache(maxsize=64)
def _stationary_cached(key) -> np.ndarray:
    raw, shape, sigma = key
    A = np.frombuffer(raw, dtype=float).reshape(shape)
    P = lyapunov_solve(A, sigma**2 * np.eye(shape[0]))
    P.setflags(write=False)
    return P


def stationary_gramian(sys: VectorSystem) -> np.ndarray:
    """P with ``A P + P A' + sigma^2 I = 0`` (strictly stable A only)."""
    if sys.spectral_abscissa >= 0:
        raise SingularLyapunov("stationary Gramian needs every eigenvalue in the open left half-plane")
    return _stationary_cached(_key(sys))


def _gramian_series(A: np.ndarray, sigma: float, t: float, terms: int = 6) -> np.ndarray:
    # Sigma' = A Sigma + Sigma A' + sigma^2 I, Sigma(0) = 0, expanded in t
    n = A.shape[0]
    coef = sigma**2 * np.eye(n)
    out = coef * t
    tk = t
    for k in range(1, terms):
        coef = (A @ coef + coef @ A.T) / (k + 1)
        tk *= t
        out = out + coef * tk
    return out


def _gramian_quad(A: np.ndarray, sigma: float, t: float) -> np.ndarray:
    def integrand(u):
        E = scipy.linalg.expm(A * u)
        return (E @ E.T).ravel()

    val, err = integrate.quad_vec(integrand, 0.0, t, epsabs=QUAD_ATOL, epsrel=1e-13, limit=2000)
    if not np.isfinite(err) or err > QUAD_ATOL * max(1.0, np.abs(val).max()):
        raise QuadratureFailure(f"Gramian quadrature error {err:.3e} above tolerance")
    G = sigma**2 * val.reshape(A.shape)
    return 0.5 * (G + G.T)


def gramian(sys: VectorSystem, t: float) -> np.ndarray:
    """State covariance Sigma(t) = E[X(t) X(t)']."""
    t = float(t)
    A = sys.A
    if t == 0.0:
        return np.zeros_like(A)
    norm = np.abs(sys.eigenvalues).max() if sys.n else 0.0
    if 2 * max(norm, np.linalg.norm(A, 2)) * t < 1e-6:
        return _gramian_series(A, sys.sigma, t)
    if sys.spectral_abscissa < 0:
        P = stationary_gramian(sys)
        E = matrix_exponential(A, t)
        G = P - E @ P @ E.T
        return 0.5 * (G + G.T)
    return _gramian_quad(A, sys.sigma, t)


def cov_matrix(sys: VectorSystem, s: float, t: float) -> np.ndarray:
    """E[X(s) X(t)'] = Sigma(s) e^{A'(t-s)} for s <= t; transposed otherwise."""
    s, t = float(s), float(t)
    if s <= t:
        return gramian(sys, s) @ matrix_exponential(sys.A, t - s).T
    return matrix_exponential(sys.A, s - t) @ gramian(sys, t)


def grid_covariances(sys: VectorSystem, h: float, N: int):
    """Covariances on the grid ``t_k = k h``, ``k < N``.

    Returns
    -------
    gram : (N, n, n) array
        ``Sigma(t_k)``.
    powers : (N, n, n) array
        ``e^{A h d}`` for ``d = 0..N-1``, so that
        ``E[X(t_k) X(t_{k+d})'] = gram[k] @ powers[d].T``.
    """
    n = sys.n
    Phi = matrix_exponential(sys.A, h)
    powers = np.empty((N, n, n))
    powers[0] = np.eye(n)
    for d in range(1, N):
        powers[d] = powers[d - 1] @ Phi
    gram = np.empty((N, n, n))
    gram[0] = 0.0
    if N > 1:
        if sys.spectral_abscissa < 0 and 2 * np.linalg.norm(sys.A, 2) * h >= 1e-6:
            P = stationary_gramian(sys)
            g = P[None] - powers[1:] @ P[None] @ np.swapaxes(powers[1:], 1, 2)
        else:
            # Sigma(t_{k+1}) = Phi Sigma(t_k) Phi' + Sigma(h)
            step = gramian(sys, h)
            g = np.empty((N - 1, n, n))
            g[0] = step
            for k in range(1, N - 1):
                g[k] = Phi @ g[k - 1] @ Phi.T + step
        gram[1:] = 0.5 * (g + np.swapaxes(g, 1, 2))
    return gram, powers


# ---------------------------------------------------------------------------
# exact one-step law


@dataclass(frozen=True, eq=False)
class TransitionLaw:
    """``x_{k+1} = phi x_k + eta_k`` with ``eta_k ~ N(0, step_cov)``."""

    phi: np.ndarray | float
    step_cov: np.ndarray | float

    @property
    def noise_factor(self):
        """Lower Cholesky factor of ``step_cov`` (square root for scalars)."""
        if np.ndim(self.step_cov) == 0:
            return float(np.sqrt(self.step_cov))
        C = np.asarray(self.step_cov)
        try:
            return np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            # rank-deficient noise: symmetric square root
            w, V = np.linalg.eigh(C)
            return V * np.sqrt(np.clip(w, 0.0, None))


def transition(sys: ScalarSystem | VectorSystem, h: float) -> TransitionLaw:
    """Exact discretisation of the SDE over one step of length ``h``."""
    if isinstance(sys, ScalarSystem):
        return TransitionLaw(float(np.exp(sys.a * h)), float(second_moment(sys, h)))
    return TransitionLaw(matrix_exponential(sys.A, h), gramian(sys, h))
