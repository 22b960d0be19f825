"""
Beyond one dimension, and past the horizon
==========================================

Random 3x3 closed-loop matrices with spectrum in [-1.5, -0.75] behave like
the scalar case: the exact MSE is close to c1 h^2 + c2 / (h B) and the best
step-size shrinks like B^(-1/3).

With a discount factor and an infinite horizon, the estimator also pays for
the part of the cost beyond T.  When that tail is negligible the optimal
step-size decays more slowly, like B^(-1/5).
"""

import math

import numpy as np

from tempres import (
    VectorSystem,
    fit_leading_coefficients,
    hstar_grid,
    hstar_infinite,
    mse_infinite_discounted,
    sample_stable_matrix,
)

T = 2.0
for seed in range(3):
    A = sample_stable_matrix(3, seed)
    sys_ = VectorSystem(A)
    fit = fit_leading_coefficients(sys_, T, [2**16, 2**18, 2**20], [T / m for m in range(40, 201, 20)])
    hs = [hstar_grid(sys_, T, B, evaluator="exact-oracle", m_max=600).h_star for B in (2**16, 2**18, 2**20)]
    slope = np.polyfit(np.log([2**16, 2**18, 2**20]), np.log(hs), 1)[0]
    eig = ", ".join(f"{e:.3f}" for e in np.linalg.eigvalsh(A))
    print(f"seed {seed}: eigenvalues [{eig}]")
    print(f"   c_h2 = {fit.c_h2:.4g}, c_hB = {fit.c_hB:.4g}, relative residual {fit.fit_residual:.1e}")
    print(f"   grid h* = {', '.join(f'{h:.4f}' for h in hs)}  -> slope {slope:.3f}")

gamma = math.exp(-1)
print("\ninfinite horizon, gamma = 1/e, T = 4 log(B) / log(1/gamma)")
for k in (12, 16, 20, 24):
    B = 2**k
    Tk = 4 * math.log(B) / math.log(1 / gamma)
    rec = hstar_infinite(-1.0, gamma, Tk, B)
    print(f"   B = 2^{k}: h* = {rec.h_star:.4f}, MSE {mse_infinite_discounted(-1.0, 1.0, Tk, gamma, rec.h_star, B):.3e}, {rec.flags}")
