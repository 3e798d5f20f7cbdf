//! Linear programming backend: a dense revised simplex method with Bland's
//! anti-cycling rule, plus a general-form front end.
//!
//! [`Simplex`] works on standard form and supports appending columns between
//! solves, which is what column generation needs. [`solve`] accepts
//! arbitrary `≤ / = / ≥` rows and variable bounds.

mod problem;
pub mod simplex;

pub use problem::{solve, Constraint, LpProblem, LpSolution, Relation, Sense, Status};
pub use simplex::{Column, Outcome, Phase, Simplex};

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    SingularBasis,
    #[error("numerical failure: {0}")]
    Numerical(String),
}
