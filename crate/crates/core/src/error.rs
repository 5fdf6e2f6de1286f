//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors raised by shaping, channel, equalization, metrics and harness code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument is non-finite or outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A value lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Bit stream length is not a multiple of the bits per symbol.
    #[error("framing error: {bits} bits cannot be split into {m}-bit symbols")]
    Framing { bits: usize, m: u32 },

    /// A configuration value violates its invariant.
    #[error("config error: {0}")]
    Config(String),

    /// A caller broke a documented precondition (unit discipline, length match, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Normal equations are singular or not positive definite.
    #[error("singular system: {0}; use ridge_lambda > 0")]
    Singular(String),

    /// Kernel dimensions do not match the equalizer configuration.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A feature row was requested without enough surrounding context.
    #[error("boundary error: symbol index {index} lacks context (valid range {lo}..{hi})")]
    Boundary { index: usize, lo: usize, hi: usize },

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user configuration rather than runtime failure.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::Parse { .. }
            | Error::Io { .. } => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
