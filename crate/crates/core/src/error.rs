//! Error types shared across the crate.

use std::fmt;

/// Errors produced by configuration validation, stores, kernels, and I/O.
#[derive(Debug)]
pub enum Error {
    /// A vector or matrix did not have the expected length/shape.
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A configuration value is invalid or inconsistent.
    Config(String),
    /// An input stream violated chronological order.
    StreamOrder {
        row: usize,
        prev: f64,
        curr: f64,
    },
    /// A data row had the wrong number of fields.
    StreamArity {
        row: usize,
        expected: usize,
        actual: usize,
    },
    /// A time difference was negative where a non-negative one is required.
    NegativeDt(f64),
    /// Softmax over a set with no finite logit.
    EmptyAttentionSet,
    /// Gradient descent produced a non-finite loss.
    FitDiverged { step: usize },
    /// Weights file is missing an array or has an inconsistent schema.
    WeightsSchema(String),
    /// Wrapped I/O error.
    Io(std::io::Error),
    /// Wrapped parse error with row context.
    Parse { row: usize, msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch {
                what,
                expected,
                actual,
            } => write!(f, "dimension mismatch for {what}: expected {expected}, got {actual}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::StreamOrder { row, prev, curr } => write!(
                f,
                "row {row}: timestamp {curr} is lower than predecessor {prev}"
            ),
            Error::StreamArity {
                row,
                expected,
                actual,
            } => write!(f, "row {row}: expected {expected} fields, got {actual}"),
            Error::NegativeDt(dt) => write!(f, "negative time difference: {dt}"),
            Error::EmptyAttentionSet => write!(f, "softmax over an empty attention set"),
            Error::FitDiverged { step } => write!(f, "fit diverged: non-finite loss at step {step}"),
            Error::WeightsSchema(msg) => write!(f, "weights schema error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Parse { row, msg } => write!(f, "row {row}: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
