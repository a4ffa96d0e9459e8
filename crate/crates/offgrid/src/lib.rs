//! Experiment harness around `offgrid-core`: TOML configs, trials, studies and CSV output.

pub mod config;
pub mod experiments;
pub mod io;
