use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate interval: s = {s} must be strictly below t = {t}")]
    DegenerateInterval { s: f64, t: f64 },

    #[error("averaging weight is locally constant on [{s}, {t}] (m2 = {m2:e}); the Malliavin weight is undefined there")]
    LocallyConstantWeight { s: f64, t: f64, m2: f64 },

    #[error("increment covariance is not positive semidefinite on [{s}, {t}] (dt*m2 = {value:e})")]
    CovarianceNotPsd { s: f64, t: f64, value: f64 },

    #[error("matrix is singular or numerically non-invertible")]
    SingularMatrix,

    #[error("volatility is not constant; the constant-volatility estimator does not apply")]
    NonConstantVolatility,

    #[error("invalid uniform draw {0}: must lie strictly inside (0, 1)")]
    InvalidDraw(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
