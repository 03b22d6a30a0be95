//! Derivative-free minimization, finite differences and small dense SPD solves.

mod diff;
mod linalg;
mod simplex;

pub use diff::{numeric_gradient, numeric_hessian, DiffError, DEFAULT_GRADIENT_STEP, DEFAULT_HESSIAN_STEP};
pub use linalg::{cholesky, invert_spd, solve_spd, LinalgError, Matrix};
pub use simplex::{nelder_mead, OptimResult, SimplexConfig, SimplexError, Termination};
