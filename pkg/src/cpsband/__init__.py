"""Fixed-size maximum-entropy sampling designs, design-based empirical
processes, and uniform confidence bands for the population CDF."""

from .calibration import (
    CalibrationError,
    CanonicalPoissonParams,
    InclusionProbabilities,
    PopulationFrame,
    canonicalize_poisson,
    cps_inclusion_from_poisson,
    pips_probabilities,
    poisson_from_cps_inclusion,
    poisson_size_variance,
    solve_truncation_constant,
    truncated_weight,
)
from .esp import SymmetricFunctionTable, prefix_table, suffix_table
from .inference import (
    CholeskyFactor,
    ConfidenceBand,
    CovarianceEstimate,
    LimitCovariance,
    QuantileEstimate,
    build_band,
    cholesky_psd,
    coverage_check,
    estimate_cov_hajek,
    estimate_cov_ht,
    limit_cov_hajek,
    limit_cov_ht,
    simulate_sup_quantile,
)
from .oracle import (
    DesignDistribution,
    empirical_cps_distribution,
    enumerate_cps_distribution,
    enumerate_poisson_distribution,
    exact_design_moments,
    exact_inclusion_orders,
    total_variation,
)
from .processes import (
    ProcessEvaluation,
    ThresholdGrid,
    centered_process_evaluate,
    hajek_evaluate,
    htep_evaluate,
    poisson_projection_variance,
    projection_residual_R,
    projection_statistic_T,
    sup_norm_cdf,
)
from .samplers import (
    FrequencyEstimate,
    RngStream,
    SampleIndicators,
    SamplingError,
    cps_sample_rejection,
    cps_sample_rejection_batch,
    cps_sample_sequential,
    cps_sample_sequential_batch,
    estimate_inclusion_frequencies,
    poisson_sample,
)
from .simulate import (
    CoverageReport,
    ReplicationRecord,
    ReportCell,
    SimConfig,
    format_report,
    generate_population,
    run_experiment,
    run_replication,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "CanonicalPoissonParams",
    "CholeskyFactor",
    "ConfidenceBand",
    "CovarianceEstimate",
    "CoverageReport",
    "DesignDistribution",
    "FrequencyEstimate",
    "InclusionProbabilities",
    "LimitCovariance",
    "PopulationFrame",
    "ProcessEvaluation",
    "QuantileEstimate",
    "ReplicationRecord",
    "ReportCell",
    "RngStream",
    "SampleIndicators",
    "SamplingError",
    "SimConfig",
    "SymmetricFunctionTable",
    "ThresholdGrid",
    "build_band",
    "canonicalize_poisson",
    "centered_process_evaluate",
    "cholesky_psd",
    "coverage_check",
    "cps_inclusion_from_poisson",
    "cps_sample_rejection",
    "cps_sample_rejection_batch",
    "cps_sample_sequential",
    "cps_sample_sequential_batch",
    "empirical_cps_distribution",
    "enumerate_cps_distribution",
    "enumerate_poisson_distribution",
    "estimate_cov_hajek",
    "estimate_cov_ht",
    "estimate_inclusion_frequencies",
    "exact_design_moments",
    "exact_inclusion_orders",
    "format_report",
    "generate_population",
    "hajek_evaluate",
    "htep_evaluate",
    "limit_cov_hajek",
    "limit_cov_ht",
    "pips_probabilities",
    "poisson_from_cps_inclusion",
    "poisson_projection_variance",
    "poisson_sample",
    "poisson_size_variance",
    "prefix_table",
    "projection_residual_R",
    "projection_statistic_T",
    "run_experiment",
    "run_replication",
    "simulate_sup_quantile",
    "solve_truncation_constant",
    "sup_norm_cdf",
    "suffix_table",
    "total_variation",
    "truncated_weight",
]
