use thiserror::Error;

/// Errors raised by the pricing, replication, PDE and calibration layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound} after {subdivisions} subdivisions")]
    NonConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("integrand returned NaN at x = {at}")]
    NanIntegrand { at: f64 },

    #[error("no strike at or below the forward {forward} (lowest strike {lowest})")]
    NoKStar { forward: f64, lowest: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("target {target} not bracketed by [{low}, {high}]")]
    NoBracket { target: f64, low: f64, high: f64 },

    #[error("function is not monotone on the bracket: {0}")]
    NonMonotone(String),

    #[error("negative variance {value}: {context}")]
    NegativeVariance { value: f64, context: String },

    #[error("PDE instability at step {step} (t = {time}): |f| = {magnitude} exceeds bound {bound}")]
    Instability {
        step: usize,
        time: f64,
        magnitude: f64,
        bound: f64,
    },

    #[error("missing implied volatility for quote {index}")]
    MissingImpliedVol { index: usize },

    #[error("io: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
