use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("prediction horizon exceeded: requested slot {requested}, trace ends at {available}")]
    HorizonExceeded { requested: usize, available: usize },

    #[error("instance too large for grid search: {links} links (limit {limit})")]
    InstanceTooLarge { links: usize, limit: usize },

    #[error("heterogeneous sweep: {0}")]
    HeterogeneousSweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
