//! Small dense convex QCQP solver.
//!
//! Problems have the form
//!
//! ```text
//! minimize    xᵀQ₀x + q₀ᵀx
//! subject to  aᵢᵀx ≤ bᵢ                      (linear)
//!             xᵀQⱼx + qⱼᵀx ≤ rⱼ,  Qⱼ ⪰ 0      (convex quadratic)
//!             ‖Cₖx + cₖ‖ ≤ dₖᵀx + eₖ          (second-order cone)
//! ```
//!
//! and are solved with a log-barrier interior-point method (damped Newton
//! centering, barrier parameter multiplied by a fixed factor per outer step).
//! A phase-1 problem that minimises a shared infeasibility slack supplies a
//! strictly feasible start when the caller does not.

mod barrier;
mod spec;

pub use barrier::{solve, SolveOptions, SolveStatus, QcqpSolution};
pub use spec::{ConeConstraint, LinearConstraint, QcqpSpec, QuadraticConstraint};
