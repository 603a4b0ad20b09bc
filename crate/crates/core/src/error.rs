use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the homogenization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hamiltonian rejected ({reason}) at p = {witness}")]
    NonConvex { witness: f64, reason: String },

    #[error("non-finite integrand value at x = {x}")]
    NonFinite { x: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("zero line assumption violated: {0}")]
    ZeroLineMissing(String),

    #[error("trajectory energy drift {drift:e} exceeds {tolerance:e}")]
    Drift { drift: f64, tolerance: f64 },

    #[error("report window [{window_lo}, {window_hi}] is within reach of the grid boundary (padding {padding}, needed {needed})")]
    BoundaryContamination {
        window_lo: f64,
        window_hi: f64,
        padding: f64,
        needed: f64,
    },

    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
