"""Exact-transition sampling and the Monte-Carlo value estimator.

Trajectories are propagated with the exact one-step law
``x_{k+1} = Phi x_k + eta_k``, ``eta_k ~ N(0, Sigma(h))``, so the sampled
marginals carry no integrator bias whatever the step-size.

Random streams
--------------
Every trajectory owns an independent stream: a Philox-4x64 counter-based
generator keyed by the user seed with the counter block initialised to
``[0, 0, replicate, trajectory]``.  Philox advances the lowest counter word
as it produces output, so the streams can never overlap, and the draws of a
trajectory do not depend on how many other trajectories exist or on the order
in which they are evaluated.  Normals come from numpy's ``Generator``
ziggurat sampler; this is the single place where that choice is made.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ._numerics import kahan_sum
from .gaussian_process import transition
from .system import EvalPlan, ScalarSystem, VectorSystem

__all__ = [
    "Trajectory",
    "EmpiricalMse",
    "stream_generator",
    "sample_trajectory",
    "sample_batch",
    "riemann_cost",
    "mc_estimate",
    "empirical_mse",
]


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: np.ndarray  # (N + 1,)
    states: np.ndarray  # (N + 1,) for scalar systems, (N + 1, n) otherwise


@dataclass(frozen=True)
class EmpiricalMse:
    mean: float
    std_error: float
    replicates: int
    seed: int
    values: tuple[float, ...]  # per-replicate squared errors, in replicate order


def stream_generator(seed: int, replicate: int, trajectory: int) -> np.random.Generator:
    """Independent normal stream for trajectory ``trajectory`` of replicate ``replicate``."""
    bitgen = np.random.Philox(key=int(seed), counter=[0, 0, int(replicate), int(trajectory)])
    return np.random.Generator(bitgen)


def _noise(seed: int, replicate: int, trajectories: range, N: int, n: int) -> np.ndarray:
    out = np.empty((len(trajectories), N, n))
    for row, i in enumerate(trajectories):
        out[row] = stream_generator(seed, replicate, i).standard_normal((N, n))
    return out


def _propagate(sys, h: float, Z: np.ndarray) -> np.ndarray:
    """States ``x_0 .. x_N`` for a batch of standard-normal arrays ``Z`` of shape (M, N, n)."""
    M, N, n = Z.shape
    law = transition(sys, h)
    if isinstance(sys, ScalarSystem):
        x = np.zeros((M, N + 1))
        # x_{k+1} = phi x_k + s z_k is a first-order IIR filter
        x[:, 1:] = lfilter([law.noise_factor], [1.0, -law.phi], Z[:, :, 0], axis=1)
        return x
    L = law.noise_factor
    eta = Z @ L.T
    PhiT = law.phi.T
    x = np.zeros((M, N + 1, n))
    for k in range(N):
        x[:, k + 1] = x[:, k] @ PhiT + eta[:, k]
    return x


def sample_trajectory(sys: ScalarSystem | VectorSystem, plan: EvalPlan, stream: np.random.Generator) -> Trajectory:
    """One exact sample path on ``plan.grid`` started at the origin."""
    Z = stream.standard_normal((plan.N, sys.n))[None]
    states = _propagate(sys, plan.h, Z)[0]
    return Trajectory(plan.grid, states)


def sample_batch(sys: ScalarSystem | VectorSystem, plan: EvalPlan, seed: int, replicate: int = 0) -> np.ndarray:
    """States of the ``plan.M`` trajectories used by :func:`mc_estimate`.

    Shape ``(M, N + 1)`` for scalar systems and ``(M, N + 1, n)`` otherwise.
    """
    Z = _noise(seed, replicate, range(1, plan.M + 1), plan.N, sys.n)
    return _propagate(sys, plan.h, Z)


def _weights(plan: EvalPlan) -> np.ndarray:
    return plan.h * plan.gamma ** (np.arange(plan.N) * plan.h)


def riemann_cost(traj: Trajectory, plan: EvalPlan, cost=1.0) -> float:
    """Left-endpoint sum ``h sum_{k<N} gamma^{t_k} x_k' Q x_k``.

    ``cost`` is the scalar weight ``q`` or the matrix ``Q``.
    """
    x = np.asarray(traj.states)[: plan.N]
    if x.ndim == 1:
        quad = float(cost) * x**2
    else:
        quad = np.einsum("ki,ij,kj->k", x, np.asarray(cost, dtype=float), x)
    return kahan_sum(_weights(plan) * quad)


def _costs(sys, plan: EvalPlan, seed: int, replicate: int) -> np.ndarray:
    x = sample_batch(sys, plan, seed, replicate)[:, : plan.N]
    w = _weights(plan)
    if isinstance(sys, ScalarSystem):
        return (sys.q * x**2) @ w
    return np.einsum("mki,ij,mkj->mk", x, sys.Q, x) @ w


def mc_estimate(sys: ScalarSystem | VectorSystem, plan: EvalPlan, seed: int, replicate: int = 0) -> float:
    """Average of the Riemann cost over ``plan.M`` independent trajectories.

    Trajectory ``i`` (``i = 1..M``) uses :func:`stream_generator` ``(seed, replicate, i)``.
    """
    return kahan_sum(_costs(sys, plan, seed, replicate)) / plan.M


def _default_workers() -> int:
    raw = os.environ.get("TEMPRES_WORKERS", "")
    return max(1, int(raw)) if raw.strip() else 1


def empirical_mse(
    sys: ScalarSystem | VectorSystem,
    plan: EvalPlan,
    target: float,
    replicates: int = 50,
    seed: int = 0,
    workers: int | None = None,
) -> EmpiricalMse:
    """Sample mean and standard error of ``(V_hat_M(h) - target)^2``.

    Replicate ``r`` draws its trajectories from streams ``(seed, r, .)``, so
    asking for more replicates extends the list without changing earlier values.
    """
    replicates = int(replicates)
    if replicates < 1:
        raise ValueError(f"need at least one replicate, got {replicates}")
    workers = _default_workers() if workers is None else max(1, int(workers))

    def one(r: int) -> float:
        return (mc_estimate(sys, plan, seed, r) - target) ** 2

    if workers == 1:
        values = [one(r) for r in range(replicates)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, range(replicates)))
    mean = kahan_sum(values) / replicates
    if replicates > 1:
        var = kahan_sum([(v - mean) ** 2 for v in values]) / (replicates - 1)
        se = float(np.sqrt(var / replicates))
    else:
        se = float("inf")
    return EmpiricalMse(mean, se, replicates, int(seed), tuple(values))
