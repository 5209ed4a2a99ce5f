//! Batch experiment runner for the treegp hill climbers: seeded parallel
//! trial sweeps, CSV and plot-data emission, summary statistics, and
//! log-log scaling fits.

pub mod config;
pub mod experiment;
pub mod scaling;

pub use config::{parse_experiment_config, ConfigParseError};
pub use experiment::{
    mean_and_sample_std, plot_data, preset, run_experiment, summarize, trial_seed, write_outputs,
    ExperimentConfig, ExperimentOutcome, HarnessError, PlotMetric, ProblemTemplate, SummaryRow,
    TrialRow, CSV_HEADER, PRESET_NAMES, SUMMARY_HEADER,
};
pub use scaling::{fit_scaling_exponent, ScalingFit};
