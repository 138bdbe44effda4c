use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An evaluation point lies outside the model's domain (typically `t >= t_c`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("degenerate design matrix: {0}")]
    DegenerateDesign(String),

    /// The bound box admits no candidate with every observation before `t_c`.
    #[error("infeasible bounds: {0}")]
    Infeasible(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },

    #[error("no observations in the selected window")]
    EmptyWindow,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
