//! Experiment harness for comparing the Particle Filter with the
//! Coordinate Particle Filter on linear-Gaussian systems.
//!
//! A sweep runs every `(D, ρ, filter)` cell of an [`ExperimentConfig`] for a
//! number of independent runs, records the RMSE of the posterior mean per
//! run and summarizes the runs as a Gaussian error model. Pairs of filters
//! are compared by the probability that one filter's error is below the
//! other's. Results are written as CSV tables and SVG heatmaps.
//!
//! Everything is a pure function of the configuration, including the master
//! seed: the worker count changes wall time, never output bytes.

pub mod config;
pub mod experiment;
pub mod report;
pub mod scenario;
pub mod stats;

use std::path::PathBuf;

pub use config::{ExperimentConfig, FilterId, Scenario};
pub use experiment::{grid_sweep, run_cell, CellStatistics, GridResult, WinProbability};
pub use report::emit_results;
pub use scenario::{block_scaling_scenario, build_model};
pub use stats::{prob_smaller_error, rmse};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Filter(#[from] cpf_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
