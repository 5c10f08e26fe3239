//! Config-driven Duffing experiments, the oversampling comparison and the oracle self-check.

mod compare;
mod config;
mod oracle_check;
mod run;

pub use compare::{compare_oversampling, OversamplingComparison, SeedComparison};
pub use config::{ExperimentConfig, NoiseKind};
pub use oracle_check::{
    gaussian_conditioning_check, kalman_equivalence_check, oracle_agreement_check, oracle_check, CheckResult,
    Measured, OracleCheckOptions, OracleReport,
};
pub use run::{
    config_from_metadata, normalized_slope, percentile, run_experiment, CoordinateStats, RunReport, Scenario,
    StepSummary, FIRST_PARAMETER, SUMMARY_COORDINATES,
};
