use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time order violated: t = {t} < s = {s}")]
    TimeOrder { t: f64, s: f64 },

    #[error("state vector must be nonzero")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("unknown system identifier `{0}`")]
    UnknownSystem(String),

    #[error("config line {line}, field `{field}`: {message}")]
    Config { line: usize, field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_order(t: f64, s: f64) -> Result<()> {
    if t.is_nan() || s.is_nan() || t < s || s < 0.0 {
        return Err(Error::TimeOrder { t, s });
    }
    Ok(())
}

pub(crate) fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation(format!("{what} is not finite ({value})")))
    }
}
