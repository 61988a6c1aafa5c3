use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("polynomials live in different variable spaces")]
    SpaceMismatch,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("point has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("evaluation point does not assign variable `{0}`")]
    MissingVariable(String),
    #[error("value function depends on t in a free-time problem")]
    TimeDependentPhi,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("certificate degree too low: term `{term}` has degree {degree} > {bound}")]
    DegreeShortfall { term: String, degree: u32, bound: u32 },
    #[error("trajectory database is empty")]
    EmptyDatabase,
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("zero polynomial cannot be normalized")]
    ZeroPolynomial,
    #[error(transparent)]
    Sdp(#[from] ioc_sdp::SdpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
