use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical breakdown in LP solver: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance too large for exhaustive enumeration: {0}")]
    SizeGuard(String),

    #[error("hook violated its budget: {0}")]
    HookBudget(String),

    #[error("no open leaf in tree")]
    NoOpenLeaf,

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("incumbent candidate is infeasible for the root instance: {0}")]
    InfeasibleIncumbent(String),

    #[error("unknown scoring rule `{0}`")]
    UnknownRule(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
