use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate local covariance: G(d) is not positive definite (bandwidth {bandwidth} vs dimension {dim})")]
    DegenerateCovariance { bandwidth: usize, dim: usize },

    #[error("bandwidth below dimension: m = {bandwidth} < p = {dim}")]
    BandwidthBelowDimension { bandwidth: usize, dim: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("zero periodogram ordinate at frequency index j = {j}")]
    ZeroOrdinate { j: usize },

    #[error("autoregressive polynomial is not stationary (root modulus {modulus:.6} <= 1)")]
    NonStationary { modulus: f64 },

    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("chain has no unique stationary distribution")]
    Reducible,
}

impl Error {
    /// Whether the error stems from numerical degeneracy of the data rather
    /// than from malformed arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCovariance { .. }
                | Error::BandwidthBelowDimension { .. }
                | Error::NonFinite(_) | Error::ZeroOrdinate { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
