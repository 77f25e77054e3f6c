use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("interference alignment infeasible: M + N = {sum} < K + 1 = {needed}")]
    Infeasible { sum: usize, needed: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("user index {index} out of range for {users} users")]
    IndexOutOfRange { index: usize, users: usize },
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("degenerate requirements: weighted rate and power requests are both zero")]
    DegenerateRequirements,
    #[error("no usable signal: every effective channel gain is zero")]
    NoSignal,
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
