//! Block-diagonal semidefinite programs: model, interior-point solver,
//! independent solution checks and SDPA interchange.

mod cone;
pub mod error;
pub mod problem;
pub mod sdpa;
pub mod solver;
pub mod validate;

pub use error::{Result, SdpError};
pub use problem::{FreeScalar, LinearExpr, LinearRow, PsdBlock, SdpProblem, VarRef};
pub use sdpa::{export_sdpa, import_sdpa, parse_sdpa, to_sdpa_string};
pub use solver::{format_log, solve, IterationRecord, SdpSolution, SolveStatus, SolverOptions};
pub use validate::{validate_solution, ValidationReport};
