"""Step-size versus data-budget trade-offs when estimating the expected
quadratic cost of linear stochastic systems from sampled trajectories."""

from .closed_form import (
    fit_leading_coefficients,
    leading_constants,
    mse_approx_and_bounds,
    mse_finite_discounted,
    mse_finite_undiscounted,
    mse_for_plan,
    mse_infinite_discounted,
    mse_marginal,
    variance_constant,
)
from .errors import ConfigError, IoFailure, NumericalFailure, TempresError
from .experiment import SweepConfig, SweepRecord, emit, parse_records, run_sweep, sample_stable_matrix
from .gaussian_process import cov_pair, cross_moment, fourth_moment, gramian, lyapunov_solve, second_moment, transition
from .ground_truth import value_finite, value_infinite, value_tail
from .monte_carlo import empirical_mse, mc_estimate, riemann_cost, sample_trajectory, stream_generator
from .oracle import MseBreakdown, estimator_mean, estimator_variance_single, mse_exact
from .stepsize import (
    extrapolate_budget,
    hstar_grid,
    hstar_infinite,
    hstar_leading,
    hstar_marginal,
    hstar_poly_root,
    hstar_refined,
    optimal_episodes,
)
from .system import (
    EvalPlan,
    HorizonMode,
    ScalarSystem,
    VectorSystem,
    admissible_grid,
    build_plan,
    validate_scalar,
    validate_vector,
)

__version__ = "0.1.0"

__all__ = [
    "admissible_grid",
    "build_plan",
    "ConfigError",
    "cov_pair",
    "cross_moment",
    "emit",
    "empirical_mse",
    "estimator_mean",
    "estimator_variance_single",
    "EvalPlan",
    "extrapolate_budget",
    "fit_leading_coefficients",
    "fourth_moment",
    "gramian",
    "HorizonMode",
    "hstar_grid",
    "hstar_infinite",
    "hstar_leading",
    "hstar_marginal",
    "hstar_poly_root",
    "hstar_refined",
    "IoFailure",
    "leading_constants",
    "lyapunov_solve",
    "mc_estimate",
    "mse_approx_and_bounds",
    "mse_exact",
    "mse_finite_discounted",
    "mse_finite_undiscounted",
    "mse_for_plan",
    "mse_infinite_discounted",
    "mse_marginal",
    "MseBreakdown",
    "NumericalFailure",
    "optimal_episodes",
    "parse_records",
    "riemann_cost",
    "run_sweep",
    "sample_stable_matrix",
    "sample_trajectory",
    "ScalarSystem",
    "second_moment",
    "stream_generator",
    "SweepConfig",
    "SweepRecord",
    "TempresError",
    "transition",
    "validate_scalar",
    "validate_vector",
    "value_finite",
    "value_infinite",
    "value_tail",
    "variance_constant",
    "VectorSystem",
]
