"""doflab: random-X degrees of freedom for arbitrary prediction models.

Monte Carlo measurement of emergent and intrinsic degrees of freedom via
optimism matching, plus deterministic proportional-asymptotics solvers for
ridge, ridgeless, lasso, lassoless, and general convex-penalized least
squares.
"""

__version__ = "0.1.0"

from .data import (
    Dataset,
    GeneratorSpec,
    NoiseSpec,
    TaskInstance,
    ar1_covariance,
    generate,
    mean_squared_error,
    sample_unit_sphere,
)
from .matching import (
    df_from_optimism,
    match_df,
    match_df_derivative,
    match_df_fraction,
    match_df_fraction_inverse,
    reference_optimism,
)
from .predictors import ConvergenceError, FittedModel, PredictorSpec, fit, smoother_weights
from .estimator import (
    DofReport,
    EstimationError,
    EstimatorConfig,
    OptimismEstimate,
    cv_optimism,
    dof_report,
    estimate_intrinsic_optimism,
    estimate_random_x_optimism,
    estimate_sigma2_proxy,
    excess_bias_variance,
    fixed_x_df,
    linear_smoother_optimism,
    luan_predictive_df,
)
from .asymptotics import (
    L1_PENALTY,
    L2_PENALTY,
    PenaltyLaw,
    RidgeSolution,
    ScalarSystemSolution,
    SignalLaw,
    SpectralAtom,
    SpectralModel,
    convex_equivalents,
    gaussian_prox_moments,
    gcv_consistency_check,
    isotropic_model,
    lasso_equivalents,
    lassoless_equivalents,
    mu_min,
    ridge_equivalents,
    ridgeless_equivalents,
    soft_threshold,
    soft_threshold_prime,
    solve_lasso_system,
    solve_lassoless_system,
    solve_ridge_mu,
    solve_ridgeless_mu,
    spectral_from_ar1,
)
from .decomposition import Attribution, ScenarioGrid, ShiftSpec, scenario_grid, shapley_attribution
