use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: undeclared variable `{name}`")]
    UndeclaredVariable { name: String, line: usize },
    #[error("variable `{name}` has an empty domain [{lo}, {hi}]")]
    EmptyDomain { name: String, lo: f64, hi: f64 },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("{op} evaluated outside its domain")]
    Domain { op: &'static str },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error("variable index {0} is not part of this function")]
    UnknownVariable(usize),
    #[error("assignment does not cover variable {0}")]
    MissingValue(usize),
    #[error("value {value} for variable {index} lies outside its domain")]
    OutOfDomain { index: usize, value: f64 },
    #[error("grid search requires a bounded domain (variable {0})")]
    UnboundedGrid(usize),
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("term {0} is not a squared residual")]
    NotSumOfSquares(usize),
    #[error("{0} is not active")]
    Inactive(String),
    #[error("restore of {requested} out of order; expected {expected}")]
    NonLifoRestore { requested: String, expected: String },
    #[error("overlapping blocks: variable {0} appears twice")]
    OverlappingBlocks(usize),
    #[error("BAL line {line}: {message}")]
    Bal { line: usize, message: String },
    #[error("{0}")]
    Spec(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
