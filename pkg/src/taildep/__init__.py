"""Rank-based M-estimation of parametric tail dependence in any dimension.

The package estimates the stable tail dependence function of multivariate
data from column ranks alone: an exact-moment empirical estimator, three
parametric families (logistic, asymmetric logistic, max-linear factor
models), criterion minimization, asymptotic covariances with confidence
regions and submodel tests, seeded samplers, and a replication-study
harness.
"""

from .core import (
    DataError,
    EstimationConfig,
    ParameterDomainError,
    ParameterSpace,
    RankMatrix,
    Sample,
    WeightSpec,
    check_stdf_bounds,
    compute_ranks,
    read_csv,
)
from .empirical import EmpiricalStdf
from .estimator import Criterion, EstimateResult, FitError, fit, kmeans_factor_start, minimize_criterion
from .families import (
    AsymmetricLogisticFamily,
    FactorFamily,
    LogisticFamily,
    SymmetricLogisticFamily,
    default_weights,
    factor_monomial_integral,
    spectral_atoms,
    weighted_moments,
    weighted_moments_jacobian,
)
from .harness import StudyReport, run_coverage_study, run_derived_quantity_study, run_study
from .inference import (
    IdentifiabilityError,
    InferenceError,
    TestResult,
    confidence_statistic,
    exceedance_cov,
    moment_covariance,
    parameter_covariance,
    stdf_limit_cov,
    submodel_test,
    with_covariance,
)
from .quadrature import CubatureResult, CubatureSpec, integrate_cube
from .samplers import (
    replication_rngs,
    sample_asymmetric_logistic,
    sample_factor,
    sample_from_family,
    sample_logistic,
)

__version__ = "0.1.0"
