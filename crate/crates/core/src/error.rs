//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Bad user input: unknown names, unsupported basis/stage pairs, malformed spec strings.
    #[error("configuration error: {0}")]
    Config(String),

    /// A dense linear system had a pivot below the singularity threshold.
    #[error("singular matrix in {context} (pivot {pivot:.3e} at column {column})")]
    Singular {
        context: String,
        column: usize,
        pivot: f64,
    },

    /// The collocation matrix F(t, h) could not be factorized.
    #[error("collocation condition violated at t = {t}, h = {h} (rcond {rcond:.3e})")]
    Collocation { t: f64, h: f64, rcond: f64 },

    /// The node polynomial has complex or repeated roots.
    #[error("infeasible node conditions: {reason}; polynomial coefficients (a0..a_s) = {coefficients:?}")]
    InfeasibleNodes {
        reason: String,
        coefficients: Vec<f64>,
    },

    /// An iterative numerical kernel failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The starting procedure for the stage vector failed.
    #[error("startup failure: {0}")]
    Startup(String),

    /// Non-finite values appeared during integration.
    #[error("solution blew up at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },

    /// Adaptive stepping drove h below the minimum.
    #[error("step size {h:.3e} below minimum at t = {t}")]
    StepTooSmall { t: f64, h: f64 },

    /// The right-hand side hit a singular point (e.g. the origin of a central force).
    #[error("right-hand side singular at t = {t}: {reason}")]
    Singularity { t: f64, reason: String },

    /// A metric needs data the problem does not provide.
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnsupportedMetric(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
