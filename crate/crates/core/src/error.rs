use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    /// No agent holds stake, so no block producer exists.
    #[error("stake vector is empty or all zero; no block producer can be drawn")]
    EmptyStake,

    #[error("epoch operation at block {t}, which is not a multiple of the epoch length {epoch_len}")]
    Sequencing { t: u64, epoch_len: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("closed-form rebalance analysis is not available for the {0} policy")]
    UnsupportedAnalysis(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
