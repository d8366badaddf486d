use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point y = {y} is outside the admissible domain {domain}")]
    OutOfDomain { y: f64, domain: &'static str },

    #[error("truncation infeasible: r_max would exceed the cap {cap} (m = {m}, y = {y}, tol = {tol:e})")]
    TruncationInfeasible { m: u64, y: f64, tol: f64, cap: u64 },

    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("malformed function file: {0}")]
    FunctionFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
