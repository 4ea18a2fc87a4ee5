use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Instance or state document does not follow the schema. `path` is a
    /// JSON-pointer-like location, e.g. `agents[0].orders.1`.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("transfer targets must be strictly positive (agent {agent} has {value})")]
    NonPositiveTarget { agent: usize, value: f64 },

    #[error("enumeration of {points} grid points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
