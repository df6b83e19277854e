use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    #[error("compatibility violation at recurrence step k = {k}: {detail}")]
    CompatibilityViolation { k: i64, detail: String },

    #[error("insufficient prefix: the induction needs coefficients through index {required}, series has {available}")]
    InsufficientPrefix { required: i64, available: i64 },

    #[error("singularity approach near t = {t}: step size underflow")]
    SingularityApproach { t: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::ContractViolation(msg.into()))
}
