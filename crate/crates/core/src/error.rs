use thiserror::Error;

/// Errors raised by the changepoint engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("observation {index} is not valid for the {model} model: {value}")]
    ModelMismatch {
        model: &'static str,
        index: usize,
        value: f64,
    },

    #[error("observation {index} is not finite: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("series too short: need at least {min} observations, got {got}")]
    TooShort { min: usize, got: usize },

    #[error("segment ({a}, {b}) is invalid for a series of length {n}")]
    Index { a: usize, b: usize, n: usize },

    #[error("{0}")]
    Domain(String),

    #[error("invalid changepoint state: {0}")]
    State(String),

    #[error("invalid hyperparameter {name} = {value}")]
    Hyperparameter { name: &'static str, value: f64 },

    #[error("alias table weight {index} is not positive and finite: {value}")]
    AliasWeight { index: usize, value: f64 },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {left} vs {right}")]
    Shape { left: usize, right: usize },

    #[error("no samples were retained")]
    EmptySummary,

    #[error("invalid sampler configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
