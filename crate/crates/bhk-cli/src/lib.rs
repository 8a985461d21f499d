//! Library surface of the `bhk` experiment runner: configuration parsing,
//! experiment pipelines, exponent fitting and report emission. The binary
//! in `main.rs` is a thin dispatcher over these.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::Config;
pub use error::{CliError, Result};
pub use experiments::{run_experiment, Experiment, RunOutcome};
pub use fit::{fit_exponent, FitResult};
pub use report::{Assertion, Ceilings, RunSummary, SeriesTable};
