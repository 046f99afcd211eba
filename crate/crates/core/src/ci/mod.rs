//! Symbol-level constructive-interference precoding.
//!
//! A [`CiProblem`] is built per symbol slot from a channel set and a
//! [`LinkBudget`], then solved either through its dual ([`solve_gp`]) or
//! through the generic QCQP engine ([`solve_interf_min`], [`solve_engine`]).

mod dual;
mod evaluate;
mod gp;
mod interf;
mod problem;

pub use dual::{dual_value_and_gradient, DualState};
pub use evaluate::{evaluate, sinr, Evaluation};
pub use gp::{fast_path, solve_gp, solve_p8, solve_power_min, GpOptions, GpOutcome, StepRule};
pub use interf::{solve_engine, solve_interf_min, solve_power_min_checked, CheckedPowerMin, InterfMinSolution};
pub use problem::{
    complex_from_w2, radar_block, realify_problem, rotate_channels, rotation_matrix, w2_from_complex,
    BeamformingSolution, CiProblem, LinkBudget, RotatedChannels,
};
