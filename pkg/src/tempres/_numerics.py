"""Small numerical helpers shared across modules."""

from __future__ import annotations

import math
from contextlib import contextmanager

import mpmath
import numpy as np

# below this |z| the (e^z - 1)/z style factors switch to their Taylor series
SERIES_THRESHOLD = 1e-6


def phi1(z):
    """(e^z - 1)/z, continuous at z = 0. Works elementwise on arrays."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    out = np.where(
        small,
        1.0 + z / 2.0 + z**2 / 6.0 + z**3 / 24.0 + z**4 / 120.0,
        np.expm1(safe) / safe,
    )
    return out[()] if out.ndim == 0 else out


def kahan_sum(values) -> float:
    """Correctly rounded sum of an iterable of floats (order independent)."""
    return math.fsum(np.ravel(np.asarray(values, dtype=float)).tolist())


def digits_lost(*small: float) -> int:
    """Rough count of decimal digits lost to cancellation in formulas whose
    removable singularity sits at ``small -> 0`` (fourth-order cancellation)."""
    worst = 0.0
    for x in small:
        x = abs(float(x))
        if 0.0 < x < 1.0:
            worst = max(worst, -math.log10(x))
    return int(math.ceil(4 * worst))


@contextmanager
def extra_precision(*small: float, base: int = 30):
    """mpmath working precision large enough to absorb cancellation."""
    with mpmath.workdps(base + digits_lost(*small)):
        yield


def check_finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ArithmeticError(f"{name} evaluated to {value!r}")
    return value
