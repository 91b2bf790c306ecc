use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {what} ({requested} > {limit})")]
    ResourceLimit {
        what: String,
        requested: u128,
        limit: u128,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("evaluation failure: {0}")]
    Evaluation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn check_limit(what: &str, requested: u128, limit: u128) -> Result<()> {
    if requested > limit {
        Err(Error::ResourceLimit {
            what: what.to_string(),
            requested,
            limit,
        })
    } else {
        Ok(())
    }
}
