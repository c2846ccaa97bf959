//! Orbit experiments: exceedance scans, declustering and the statistics
//! compared against the limit laws.

mod config;
mod estimate;
mod stats;
mod trial;

pub use config::{ExperimentConfig, PreparedExperiment, ZetaSpec, MAX_PERIOD_SEARCH};
pub use estimate::{
    block_maxima_cdf, cluster_size_counts, decluster, decluster_all, ei_measure_ratio,
    ei_measure_ratio_estimate, empirical_extremal_index, empirical_multiplicity,
    estimate_block_maxima_cdf, gap_ks_statistic, multiplicity_chi_square, pooled_gaps,
    repp_chi_square, repp_counts, ClusterSummary, RatioEstimate,
};
pub use stats::{
    chi_square_test, exponential_ks, kolmogorov_survival, ks_test, ChiSquareResult, KsResult,
    MIN_GAPS,
};
pub use trial::{
    capped_observable, run_experiment, run_trial, threads_from_env, with_workers, TrialRecord,
};
