//! Command-line front end for the `adaptive-cp` changepoint engines.
//!
//! A run reads one column of a delimited file, fits the configured engine and
//! writes plain-text summaries plus a JSON manifest from which the run can be
//! repeated.

pub mod config;
pub mod error;
pub mod execute;
pub mod ingest;

pub use config::{Column, Engine, ModelSpec, PriorSpec, RunConfig, SamplerSettings};
pub use error::{CliError, Result};
pub use execute::{execute, Report};
pub use ingest::ingest;
