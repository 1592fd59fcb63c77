use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: non-finite entry")]
    NonFinite { what: &'static str },

    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("resolvent is singular at lambda = {lambda} (lambda lies in the spectrum)")]
    Singular { lambda: Complex64 },

    #[error("feedthrough loop is singular: I - D*Gamma is not invertible")]
    FeedthroughLoop,

    #[error("feedback is not admissible: sigma_min(I - F*Gamma) = {sigma_min:e} <= {threshold:e}")]
    NotAdmissible { sigma_min: f64, threshold: f64 },

    #[error("not exactly controllable at t0 = {t0}: sigma_min = {sigma_min:e}")]
    NotControllable { t0: f64, sigma_min: f64 },

    #[error("not exactly observable at t0 = {t0}: constant = {constant:e}")]
    NotObservable { t0: f64, constant: f64 },

    #[error("time {t} is not a point of the grid with step {dt}")]
    OffGrid { t: f64, dt: f64 },

    #[error("{what} does not have full row rank")]
    RankDeficient { what: &'static str },

    #[error("feedthrough sweep did not converge (final residual {residual:e})")]
    NonConvergent { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
