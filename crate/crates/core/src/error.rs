//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The requested certificate cannot exist under the given bounds.
    #[error("certification infeasible: {0}")]
    Infeasible(String),

    #[error("matrix is not Hurwitz: eigenvalue {re}{im:+}i has real part >= 0")]
    NotHurwitz { re: f64, im: f64 },

    #[error("solver failed: {msg}")]
    Solver { msg: String, history: Vec<f64> },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("CFL violation: dt = {dt} exceeds the stable limit; rerun with dt <= {dt_max}")]
    Cfl { dt: f64, dt_max: f64 },

    #[error("data quality: {0}")]
    DataQuality(String),

    /// A hypothesis of the result being checked does not hold (e.g. no
    /// contraction certified at t0), so the formula does not apply.
    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
