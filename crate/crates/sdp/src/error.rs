use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("problem has no constraints and an empty objective")]
    EmptyProblem,
    #[error("constraint {row} references undeclared variable {var}")]
    DanglingReference { row: String, var: String },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("SDPA parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SdpError>;
