//! Bayesian multiple-changepoint inference for count and Gaussian series.
//!
//! Two engines share one collapsed posterior over changepoint indicators:
//! an adaptive Metropolis-Hastings sampler ([`sampler`]) that scales to long
//! series, and exact filtering recursions ([`recursions`]) for moderate
//! lengths. [`diagnostics`] summarises and compares their output.

pub mod diagnostics;
pub mod error;
pub mod logspace;
pub mod models;
pub mod recursions;
pub mod sampler;
pub mod state;
pub mod weighted_sampling;

pub use error::{Error, Result};
pub use models::{CollapsedPosterior, GapPrior, SegmentModel, SeriesCache};
pub use state::ChangepointState;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
