//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A field that must be strictly positive has a nonpositive cell.
    #[error("positivity error: {0}")]
    Positivity(String),

    /// Degenerate diffusion step attempted without regularisation.
    #[error("degeneracy error: {0}; rerun with eps > 0")]
    Degeneracy(String),

    /// The stable step size fell below the configured floor.
    #[error("stiffness error: stable dt {dt:.3e} below dt_min {dt_min:.3e} ({detail})")]
    Stiffness {
        dt: f64,
        dt_min: f64,
        detail: String,
    },

    /// Iterative linear solve did not converge within its budget.
    #[error("solver error: {0}")]
    Solver(String),

    /// The discrete solution left the valid range (NaN, nonpositive cell, or
    /// guard exceeded).
    #[error("numerical blow-up at t = {t}: {detail}")]
    BlowUp { t: f64, detail: String },

    /// Declared derivatives disagree with finite differences of the function.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Trajectory snapshots too sparse for the requested quadrature.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Records table is missing data a monitor needs.
    #[error("report error: {0}")]
    Report(String),

    /// Expression parse failure (offset is a byte position in the source).
    #[error("expression error at byte {offset}: {message}")]
    Expr { offset: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
