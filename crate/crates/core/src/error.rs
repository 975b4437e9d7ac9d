use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("exponent {exponent} is not a multiple of 1/{w}")]
    BadExponent { exponent: String, w: u32 },

    #[error("pole: THETA vanishes at the evaluation point")]
    Pole,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("expression is not homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("principal symbol is not positive definite: {0}")]
    NotPositive(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
