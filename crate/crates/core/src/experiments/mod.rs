//! Configured experiments and their tabular output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, sweep_point, sweep_rabi, SweepPoint, COMMANDS};
pub use config::{ExperimentConfig, Format, Units};
pub use output::{Cell, Table};
