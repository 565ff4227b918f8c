use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An item index, vector length, or bidder id does not match the instance.
    #[error("instance shape: {0}")]
    Shape(String),

    /// The requested computation is outside what the configured backends support.
    #[error("capability: {0}")]
    Capability(String),

    /// An argument is outside the operation's domain.
    #[error("domain: {0}")]
    Domain(String),

    /// A structural invariant was found broken.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
