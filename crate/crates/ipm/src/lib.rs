//! A primal-dual interior-point solver for sparse nonlinear programs with
//! equality constraints and variable bounds.
//!
//! The Newton systems are factored with a sparse symmetric indefinite
//! LDLᵀ that uses static 2×2 pivots pairing each constraint with a primal
//! variable, plus inertia correction on the Hessian block.

mod kkt;
pub mod ldl;
mod ordering;
mod problem;
mod solver;

pub use problem::NlpProblem;
pub use solver::{solve, IpmOptions, IpmResult, Status, WarmStart};
