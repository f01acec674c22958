use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("window too small: need {required} sites, have {available}")]
    WindowTooSmall { required: usize, available: usize },
    #[error("initial data rejected at site {index}: {reason}")]
    InitialData { index: i64, reason: String },
    #[error("invariant breach at t={t}: {what}")]
    Invariant { t: f64, what: String },
    #[error("event stream: {0}")]
    Events(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
