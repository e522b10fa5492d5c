use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument {arg} outside the domain of {label}")]
    Domain { label: String, arg: f64 },

    #[error("numeric failure in {context}: {detail}")]
    Numeric { context: String, detail: String },

    #[error("growth schedule infeasible: alpha = {alpha} (must be < 1)")]
    ScheduleInfeasible { alpha: f64 },

    #[error("no witness: {0}")]
    NoWitness(String),

    #[error("degenerate witness: {0}")]
    DegenerateWitness(String),

    #[error("size limit exceeded: {size} > {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("stage m = {m} failed: {cause}")]
    Stage { m: usize, cause: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
