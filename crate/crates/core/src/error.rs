use thiserror::Error;

use crate::quadrature::QuadratureError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument fell outside its admissible interval.
    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    /// A model/family combination breaks a standing assumption (participation,
    /// bracketing of the indifference bid, ...).
    #[error("assumption violated at y={y}, z={z}: {reason}")]
    Assumption { y: f64, z: f64, reason: String },

    #[error("precondition failed: {reason} (measured gap {gap:e})")]
    Precondition { reason: String, gap: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("root finding did not converge: {reason}, best bid {best}")]
    Root { reason: String, best: f64 },

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain { what, value, lo, hi }
    }

    /// True for failures caused by numerical non-convergence rather than bad
    /// inputs or failed property checks.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::Root { .. })
    }
}

/// Checks `lo <= value <= hi` with a relative slack of a few ulps.
pub(crate) fn check_in(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if !value.is_finite() || value < lo - slack || value > hi + slack {
        return Err(Error::domain(what, value, lo, hi));
    }
    Ok(())
}
