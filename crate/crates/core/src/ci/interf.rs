use serde::{Deserialize, Serialize};

use super::dual::DualState;
use super::gp::{solve_p8, solve_power_min, GpOptions};
use super::problem::{BeamformingSolution, CiProblem};
use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};
use crate::qcqp::{self, QcqpSolution, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfMinSolution {
    pub solution: BeamformingSolution,
    /// `Σₘ ‖βₘᵀw₂‖²`, mW.
    pub objective: f64,
    /// `‖βₘᵀw₂‖²` per antenna, mW.
    pub interference: Vec<f64>,
}

/// Power minimisation with INR caps through the generic QCQP engine.
pub fn solve_engine(p: &CiProblem, opts: &SolveOptions) -> Result<(BeamformingSolution, QcqpSolution)> {
    let spec = p.power_min_qcqp();
    let sol = qcqp::solve(&spec, None, opts)?;
    Ok((p.solution_from_w2(&sol.x), sol))
}

/// Power minimisation by the dual route, with the QCQP engine taking over
/// when the dual run hits its iteration limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckedPowerMin {
    pub solution: BeamformingSolution,
    pub dual: DualState,
    /// The engine's answer replaced the dual one.
    pub fallback: bool,
    /// False only when both routes stopped short; `solution` is then the
    /// last dual iterate.
    pub converged: bool,
}

pub fn solve_power_min_checked(p: &CiProblem, gp: &GpOptions, engine: &SolveOptions) -> Result<CheckedPowerMin> {
    let out = solve_power_min(p, gp)?;
    if out.state.converged {
        return Ok(CheckedPowerMin { solution: out.solution, dual: out.state, fallback: false, converged: true });
    }
    match solve_engine(p, engine) {
        Ok((solution, sol)) => {
            let converged = sol.status == qcqp::SolveStatus::Optimal;
            Ok(CheckedPowerMin { solution, dual: out.state, fallback: true, converged })
        }
        Err(e) if e.is_infeasible() => Err(e),
        Err(_) => Ok(CheckedPowerMin { solution: out.solution, dual: out.state, fallback: false, converged: false }),
    }
}

/// Minimise total interference on the radar subject to CI targets and `‖w‖² ≤ budget`.
pub fn solve_interf_min(p: &CiProblem, budget: f64, opts: &SolveOptions) -> Result<InterfMinSolution> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidArgument(format!("power budget must be positive, got {budget}")));
    }
    let dim = 2 * p.n;
    let q0 = p.interference_gram();
    let w2 = if q0.amax() == 0.0 {
        // Nothing to minimise: the minimum-power CI point is the canonical answer.
        let out = solve_p8(p, &GpOptions::default())?;
        if out.solution.power > budget {
            return Err(Error::Infeasible(format!(
                "CI targets need {:.6} mW, budget is {budget} mW",
                out.solution.power
            )));
        }
        out.solution.w2()
    } else {
        let mut spec = qcqp::QcqpSpec::new(q0, RVector::zeros(dim));
        p.push_ci_constraints(&mut spec);
        spec.add_quadratic(RMatrix::identity(dim, dim), RVector::zeros(dim), budget);
        qcqp::solve(&spec, None, opts)?.x
    };
    let interference = p.interference(&w2);
    Ok(InterfMinSolution {
        objective: interference.iter().sum(),
        interference,
        solution: p.solution_from_w2(&w2),
    })
}
