"""Age of information and age-cost analysis for discrete-time status-update systems."""

from .coud import (
    AgeFunction,
    CostKind,
    Metric,
    SeriesApproximation,
    approximate,
    coud_mean_closed,
    coud_mean_numeric,
    coud_mean_series,
    cost_mean,
    pcoud_mean_closed,
    pcoud_mean_numeric,
    pcoud_mean_series,
)
from .errors import (
    AccuracyError,
    AoIError,
    ConvergenceError,
    DegenerateModelError,
    DivergenceError,
    DomainError,
    InconsistentInputsError,
    InsufficientDataError,
    InvalidInputError,
    PoleError,
    StabilityError,
    UnsupportedCostError,
)
from .framework import (
    DiscreteCdf,
    DiscretePmf,
    PreemptionTransforms,
    aoi_gf_from_components,
    aoi_pmf_from_components,
    fcfs_paoi_pmf_general,
    lcfs_aoi_gf_general,
    lcfs_conditional_transforms,
    lcfs_paoi_gf_general,
    lcfs_theta,
    total_variation,
)
from .gf import RationalGF, SeriesAccuracy, coefficients, evaluate, lerch_phi, polylog
from .models import (
    BUFFERLESS,
    FCFS,
    LCFS,
    Model,
    QueueParams,
    aoi_cdf,
    aoi_distribution,
    aoi_gf,
    aoi_pmf,
    fcfs_system_time_gf,
    fcfs_system_time_pmf,
    paoi_cdf,
    paoi_distribution,
    paoi_gf,
    paoi_pmf,
)
from .optimize import OptimizationResult, optimal_lambda, optimal_lambda_numeric, optimal_lambda_pcoud_closed
from .sim import EmpiricalStats, Quantity, SimConfig, empirical_coud, empirical_pmf, simulate, theorem1_residual

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "AgeFunction",
    "AoIError",
    "BUFFERLESS",
    "ConvergenceError",
    "CostKind",
    "DegenerateModelError",
    "DiscreteCdf",
    "DiscretePmf",
    "DivergenceError",
    "DomainError",
    "EmpiricalStats",
    "FCFS",
    "InconsistentInputsError",
    "InsufficientDataError",
    "InvalidInputError",
    "LCFS",
    "Metric",
    "Model",
    "OptimizationResult",
    "PoleError",
    "PreemptionTransforms",
    "Quantity",
    "QueueParams",
    "RationalGF",
    "SeriesAccuracy",
    "SeriesApproximation",
    "SimConfig",
    "StabilityError",
    "UnsupportedCostError",
    "aoi_cdf",
    "aoi_distribution",
    "aoi_gf",
    "aoi_gf_from_components",
    "aoi_pmf",
    "aoi_pmf_from_components",
    "approximate",
    "coefficients",
    "cost_mean",
    "coud_mean_closed",
    "coud_mean_numeric",
    "coud_mean_series",
    "empirical_coud",
    "empirical_pmf",
    "evaluate",
    "fcfs_paoi_pmf_general",
    "fcfs_system_time_gf",
    "fcfs_system_time_pmf",
    "lcfs_aoi_gf_general",
    "lcfs_conditional_transforms",
    "lcfs_paoi_gf_general",
    "lcfs_theta",
    "lerch_phi",
    "optimal_lambda",
    "optimal_lambda_numeric",
    "optimal_lambda_pcoud_closed",
    "paoi_cdf",
    "paoi_distribution",
    "paoi_gf",
    "paoi_pmf",
    "pcoud_mean_closed",
    "pcoud_mean_numeric",
    "pcoud_mean_series",
    "polylog",
    "simulate",
    "theorem1_residual",
    "total_variation",
]
