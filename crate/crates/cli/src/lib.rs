//! Experiment orchestration for the polaron simulator: JSON configuration,
//! canned experiments, decay fits for the stability run, and file output.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;

pub use config::{ExperimentConfig, ExperimentKind, UnitMap, UnitsConfig};
pub use error::CliError;
pub use experiments::{run_experiment, stability_report, ExperimentOutput, StabilityReport};
pub use polaron_core::{fit_temporal_decay, DecayFit};
