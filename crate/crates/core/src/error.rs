use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A law or model was constructed with invalid parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument fell outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A fractional moment does not exist at the requested exponent.
    #[error("divergent moment: Re(s) = {re_s} outside the finite-moment strip (max {strip_max})")]
    DivergentMoment { re_s: f64, strip_max: f64 },

    /// Geometric Mellin series with |E[Y^s]| >= 1.
    #[error("divergent series: |z| = {modulus} >= 1")]
    DivergentSeries { modulus: f64 },

    /// The formula's denominator 1 - E[Y^alpha] vanishes.
    #[error("singular ratio: E[Y^alpha] = 1 within tolerance")]
    SingularRatio,

    /// Infinite-horizon truncation cannot be justified from the moments.
    #[error("truncation unjustified: {0}")]
    TruncationUnjustified(String),

    /// A constructive step (twist, centering, root-solve) failed.
    #[error("construction error: {0}")]
    Construction(String),

    /// The operation is not implemented for this input class.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Numerical routine failed to converge to the requested tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Input data admits no meaningful estimate (e.g. all-tied order
    /// statistics in the Hill estimator).
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
