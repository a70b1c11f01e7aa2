//! Experiment harness: config parsing, parallel sweeps, CSV output.

pub mod config;
pub mod run;
