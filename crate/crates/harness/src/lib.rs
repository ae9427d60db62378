//! Simulation harness for gambling confidence sequences: data generators,
//! experiment runner and output writers behind the `gcs` binary.

pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod observations;

pub use config::{ExperimentConfig, Preset};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, Results};
