//! Experiment harness: configuration files, scenario runs, CSV and SVG
//! output, and the command implementations behind the `zopl` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod scenario;

pub use error::{HarnessError, Result};
