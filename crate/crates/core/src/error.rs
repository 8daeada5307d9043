use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: malformed edge row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
    #[error("user {user}: missing profile field(s): {fields}")]
    MissingField { user: u64, fields: String },
}
