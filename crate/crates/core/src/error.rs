use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty grid")]
    EmptyGrid,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time {t} is not on the grid with step {step}")]
    OffGrid { t: f64, step: f64 },

    #[error("C0 function must vanish at the left end point, found {0}")]
    NotInC0(f64),

    #[error("w <= sup|b_mu| ({weight} <= {bound}): contraction condition of the renewal equation fails")]
    ContractionViolated { weight: f64, bound: f64 },

    #[error("{what} did not converge in {iterations} iterations (last distance {distance:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        distance: f64,
    },

    #[error("Picard map is not contracting: distance ratios {ratios:?}")]
    NonContraction { ratios: Vec<f64> },

    #[error("basis is not orthonormal: Gram entry ({i}, {j}) = {value}")]
    NotOrthonormal { i: usize, j: usize, value: f64 },

    #[error("exponent alpha = {0} must lie in (0, 1/2)")]
    SingularExponent(f64),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
