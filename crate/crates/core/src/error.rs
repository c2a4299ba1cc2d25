use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("cannot parse scheme `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("simplex exceeded its iteration cap ({iterations} pivots on {rows} rows x {cols} columns)")]
    IterationLimit {
        iterations: usize,
        rows: usize,
        cols: usize,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("total target rate is zero, energy per bit is undefined")]
    ZeroRate,

    #[error("bisection did not converge: {0}")]
    Bisection(String),

    #[error("linear program is numerically unreliable: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
