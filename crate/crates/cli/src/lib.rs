//! Experiment driver: configuration, presets, single runs and cross-tier
//! convergence studies.

pub mod config;
pub mod convergence;
pub mod error;
pub mod run;
pub mod setup;

pub use config::{preset, ExperimentConfig, Model, Overrides, PresetName};
pub use convergence::{convergence_study, ConvergenceReport, Tier};
pub use error::{CliError, Result};
pub use run::{run, RunSummary, Simulation};
