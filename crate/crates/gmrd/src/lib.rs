//! Command-line companion to `gmrd-core`: JSON problem documents, CSV
//! reports and rayon-parallel sweeps and Monte Carlo runs.

pub mod commands;
pub mod config;
pub mod parallel;
pub mod report;

pub use commands::{CliError, Options};
pub use config::{ConfigError, Problem, load_problem};
