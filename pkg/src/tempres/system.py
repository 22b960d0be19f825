"""Systems, cost weights and evaluation plans.

The closed-loop dynamics are ``dX = A X dt + sigma dW`` started at the origin,
with running cost ``gamma**t * X' Q X``.  Scalar systems use lower-case
``a`` and ``q``.

The dataclasses are plain immutable records; the ``validate_*`` and
:func:`build_plan` constructors enforce the invariants.  Computational
routines accept any record, which keeps degenerate cases such as
``sigma = 0`` usable in tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetTooSmall,
    ConfigError,
    DimensionMismatch,
    NonIntegerGrid,
    NonPositiveParameter,
    NonSpdCost,
    UnstableSystem,
)

__all__ = [
    "HorizonMode",
    "ScalarSystem",
    "VectorSystem",
    "EvalPlan",
    "validate_scalar",
    "validate_vector",
    "build_plan",
    "admissible_grid",
    "as_vector",
]

GRID_RTOL = 1e-9


class HorizonMode(str, enum.Enum):
    FINITE_UNDISCOUNTED = "finite-undiscounted"
    FINITE_DISCOUNTED = "finite-discounted"
    INFINITE_DISCOUNTED = "infinite-discounted"

    @classmethod
    def parse(cls, value: "HorizonMode | str") -> "HorizonMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ConfigError(f"unknown horizon mode {value!r}; expected one of {choices}") from None

    @property
    def is_finite(self) -> bool:
        return self is not HorizonMode.INFINITE_DISCOUNTED


@dataclass(frozen=True)
class ScalarSystem:
    a: float
    sigma: float = 1.0
    q: float = 1.0

    n = 1

    def scaled(self, q_scale: float) -> "ScalarSystem":
        return ScalarSystem(self.a, self.sigma, self.q * q_scale)


@dataclass(frozen=True, eq=False)
class VectorSystem:
    A: np.ndarray
    sigma: float = 1.0
    Q: np.ndarray = None
    eigenvalues: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        Q = np.eye(A.shape[0]) if self.Q is None else np.array(self.Q, dtype=float, ndmin=2)
        A.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)
        if self.eigenvalues is None and A.shape[0] == A.shape[1]:
            eig = np.linalg.eigvals(A)
            eig.setflags(write=False)
            object.__setattr__(self, "eigenvalues", eig)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))

    def scaled(self, q_scale: float) -> "VectorSystem":
        return VectorSystem(self.A, self.sigma, self.Q * q_scale)

    def transformed(self, L: np.ndarray) -> "VectorSystem":
        """System with ``(L' A L, L' Q L)``; for orthogonal ``L`` this is a change of basis."""
        L = np.asarray(L, dtype=float)
        return VectorSystem(L.T @ self.A @ L, self.sigma, L.T @ self.Q @ L)


def as_vector(sys: ScalarSystem | VectorSystem) -> VectorSystem:
    """Embed a scalar system as a 1x1 vector system."""
    if isinstance(sys, VectorSystem):
        return sys
    return VectorSystem([[sys.a]], sys.sigma, [[sys.q]])


@dataclass(frozen=True)
class EvalPlan:
    """Step-size ``h`` over ``[0, T]`` with ``N = T/h`` samples per trajectory
    and ``M = floor(B/N)`` trajectories; the budget remainder is unused."""

    h: float
    B: int
    T: float
    gamma: float
    mode: HorizonMode
    N: int
    M: int

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h

    @property
    def samples_used(self) -> int:
        return self.M * self.N


def _check_gamma(gamma: float, mode: HorizonMode) -> float:
    gamma = float(gamma)
    if not (0.0 < gamma <= 1.0):
        raise ConfigError(f"discount factor must lie in (0, 1], got {gamma}")
    if mode is HorizonMode.FINITE_UNDISCOUNTED and gamma != 1.0:
        raise ConfigError("finite-undiscounted mode requires gamma = 1")
    if mode is not HorizonMode.FINITE_UNDISCOUNTED and gamma == 1.0:
        raise ConfigError(f"{mode.value} mode requires gamma < 1")
    return gamma


def _default_gamma(mode: HorizonMode, gamma: float | None) -> float:
    if gamma is not None:
        return float(gamma)
    if mode is HorizonMode.FINITE_UNDISCOUNTED:
        return 1.0
    raise ConfigError(f"{mode.value} mode needs an explicit gamma < 1")


def _check_discount_margin(re_max: float, gamma: float) -> None:
    # the tail constants need a + log(gamma) < 0 and 2a + log(gamma) < 0
    log_g = math.log(gamma)
    if not (re_max + log_g < 0 and 2 * re_max + log_g < 0):
        raise UnstableSystem(
            f"infinite-horizon value diverges: drift {re_max} is not dominated by log(gamma) = {log_g}"
        )


def validate_scalar(a: float, sigma: float, q: float, mode="finite-undiscounted", gamma: float | None = None) -> ScalarSystem:
    """Check and build a scalar Langevin system.

    ``a = 0`` (Brownian motion) is allowed in every mode as long as the
    discount keeps the infinite-horizon value finite.
    """
    mode = HorizonMode.parse(mode)
    a, sigma, q = float(a), float(sigma), float(q)
    if not all(map(math.isfinite, (a, sigma, q))):
        raise ConfigError("system parameters must be finite")
    if a > 0:
        raise UnstableSystem(f"drift a = {a} > 0 is unstable")
    if sigma <= 0:
        raise NonPositiveParameter(f"sigma must be positive, got {sigma}")
    if q <= 0:
        raise NonPositiveParameter(f"q must be positive, got {q}")
    if mode is HorizonMode.INFINITE_DISCOUNTED:
        g = _default_gamma(mode, gamma)
        _check_gamma(g, mode)
        _check_discount_margin(a, g)
    return ScalarSystem(a, sigma, q)


def validate_vector(A, sigma: float, Q, mode="finite-undiscounted", gamma: float | None = None) -> VectorSystem:
    """Check and build an n-dimensional system ``dX = A X dt + sigma dW``."""
    mode = HorizonMode.parse(mode)
    A = np.array(A, dtype=float, ndmin=2)
    Q = np.array(Q, dtype=float, ndmin=2)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {A.shape}")
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionMismatch(f"Q must be square, got shape {Q.shape}")
    if A.shape != Q.shape:
        raise DimensionMismatch(f"A is {A.shape} but Q is {Q.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Q)) and math.isfinite(sigma)):
        raise ConfigError("system parameters must be finite")
    sigma = float(sigma)
    if sigma <= 0:
        raise NonPositiveParameter(f"sigma must be positive, got {sigma}")
    if not np.allclose(Q, Q.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(Q).max())):
        raise NonSpdCost("Q must be symmetric")
    if np.linalg.eigvalsh(Q).min() <= 0:
        raise NonSpdCost("Q must be positive definite")
    sys = VectorSystem(A, sigma, Q)
    re_max = sys.spectral_abscissa
    if re_max > 0:
        raise UnstableSystem(f"A has an eigenvalue with positive real part {re_max}")
    if mode is HorizonMode.INFINITE_DISCOUNTED:
        g = _default_gamma(mode, gamma)
        _check_gamma(g, mode)
        _check_discount_margin(re_max, g)
    return sys


def build_plan(h: float, B: int, T: float, gamma: float = 1.0, mode="finite-undiscounted") -> EvalPlan:
    """Derive ``N = T/h`` and ``M = floor(B/N)``."""
    mode = HorizonMode.parse(mode)
    h, T = float(h), float(T)
    if not (h > 0 and math.isfinite(h)):
        raise NonPositiveParameter(f"step-size must be positive, got {h}")
    if not (T > 0 and math.isfinite(T)):
        raise NonPositiveParameter(f"horizon must be positive, got {T}")
    if int(B) != B or B < 1:
        raise ConfigError(f"budget must be a positive integer, got {B}")
    B = int(B)
    gamma = _check_gamma(gamma, mode)
    ratio = T / h
    N = int(round(ratio))
    if N < 1 or abs(ratio - N) > GRID_RTOL * N:
        raise NonIntegerGrid(f"T/h = {ratio!r} is not an integer")
    if B < N:
        raise BudgetTooSmall(f"budget {B} cannot hold one trajectory of {N} samples")
    return EvalPlan(h=T / N, B=B, T=T, gamma=gamma, mode=mode, N=N, M=B // N)


def admissible_grid(T: float, B: int, m_max: int | None = None) -> list[float]:
    """Step-sizes ``T/m`` for ``m = 1..m_max``; each leaves room for a whole trajectory."""
    m_max = int(B) if m_max is None else int(m_max)
    if m_max > B:
        raise ConfigError(f"m_max = {m_max} exceeds the budget {B}")
    return [T / m for m in range(1, m_max + 1)]
