//! Crate-wide error type.
//!
//! Variants are grouped by how the CLI must exit: configuration problems
//! (exit 2), numerical blow-up (exit 3), and I/O failures (exit 4).  Library
//! callers match on the variant; `runner::exit_code` owns the mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument is outside its mathematical domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A derived-constant formula was evaluated outside its regime of
    /// validity (e.g. the attraction constant with a non-admissible rate).
    #[error("regime violation: {0}")]
    Regime(String),

    /// Mismatched vector lengths or grids between cooperating objects.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Config file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// A time or index fell outside a sampled path window.
    #[error("path window: {0}")]
    Window(String),

    /// The integrator produced a non-finite value.
    #[error("numerical blow-up at t = {t}")]
    BlowUp { t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
