//! Inverse optimal control of polynomial systems through relaxed
//! Hamilton-Jacobi-Bellman certificates and sums-of-squares programming.

pub mod error;
pub mod polynomial;
pub mod semialgebraic;
pub mod sos;
pub mod trajectory;
pub mod bench;
pub mod iocp;
pub mod tables;
pub mod verify;
pub mod compare;
pub mod bundle;

pub use error::{CoreError, Result};
