"""Long-only minimum variance portfolios under a one-factor covariance model.

Exact closed-form solver with a KKT certificate and brute-force oracle,
population asymptotics of the active ratio, and a seeded Monte Carlo engine
reproducing the published finite-universe experiments.
"""

__version__ = "0.1.0"

from .model import (
    CovarianceView,
    FactorModel,
    SortedModel,
    canonicalize,
    covariance_entry,
)
from .solver import (
    KktCertificate,
    LomvSolution,
    NumericalBreakdownError,
    RSequence,
    compute_r_sequence,
    extend_universe,
    portfolio_variance,
    solve_gmv_longshort,
    solve_lomv,
    threshold_beta,
    verify_kkt,
)
from .oracle import (
    DenseCovariance,
    OracleResult,
    covariance_from_model,
    oracle_restricted_weights,
    oracle_solve,
    random_factor_instance,
)
from .distributions import (
    BetaDistribution,
    DiscreteDistribution,
    EmpiricalDistribution,
    NormalDistribution,
    UniformDistribution,
    dist_from_json,
)
from .asymptotics import (
    AsymptoticReport,
    GCurve,
    ThetaBound,
    classify_and_solve,
    find_g_zero,
    g_eval,
    make_g_curve,
    normal_family_constants,
    theta_bound,
    verify_bound_on_family,
)
from .montecarlo import (
    ConstantDelta,
    IidDelta,
    SimConfig,
    TrialBatch,
    empirical_beta_star,
    empirical_g,
    nonconvergence_experiment,
    run_batch,
    trial_rng,
)
from .estimator import LongOnlyMinVariance

__all__ = [
    "AsymptoticReport",
    "BetaDistribution",
    "ConstantDelta",
    "CovarianceView",
    "DenseCovariance",
    "DiscreteDistribution",
    "EmpiricalDistribution",
    "FactorModel",
    "GCurve",
    "IidDelta",
    "KktCertificate",
    "LomvSolution",
    "LongOnlyMinVariance",
    "NormalDistribution",
    "NumericalBreakdownError",
    "OracleResult",
    "RSequence",
    "SimConfig",
    "SortedModel",
    "ThetaBound",
    "TrialBatch",
    "UniformDistribution",
    "canonicalize",
    "classify_and_solve",
    "compute_r_sequence",
    "covariance_entry",
    "covariance_from_model",
    "dist_from_json",
    "empirical_beta_star",
    "empirical_g",
    "extend_universe",
    "find_g_zero",
    "g_eval",
    "make_g_curve",
    "nonconvergence_experiment",
    "normal_family_constants",
    "oracle_restricted_weights",
    "oracle_solve",
    "portfolio_variance",
    "random_factor_instance",
    "run_batch",
    "solve_gmv_longshort",
    "solve_lomv",
    "theta_bound",
    "threshold_beta",
    "trial_rng",
    "verify_bound_on_family",
    "verify_kkt",
]
