//! Residuals of the quaternionic Monge-Ampère equation and a Newton–Krylov solver.

mod krylov;
mod newton;
mod problem;

pub use krylov::{gmres, KrylovSolution};
pub use newton::{
    flat_inverse, newton_solve, solve_with_ramp, uniqueness_probe, SolveError, SolveOptions, SolveState, TraceEntry,
};
pub use problem::Problem;
