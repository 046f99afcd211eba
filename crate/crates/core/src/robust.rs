//! Worst-case robust power minimisation under bounded channel errors.
//!
//! Every constraint of the nominal problem is replaced by its worst case over
//! the error balls `‖eₕ‖ ≤ δ_h`, `‖e_g‖ ≤ δ_g`, `‖e_f‖ ≤ δ_f`. SINR rows become
//! second-order cones, INR rows get a norm penalty, and the result is handed to
//! the QCQP engine.

use serde::{Deserialize, Serialize};

use crate::ci::{realify_problem, rotate_channels, rotation_matrix, BeamformingSolution, CiProblem, LinkBudget};
use crate::error::{Error, Result};
use crate::linalg::{realify, CVector, RMatrix, RVector};
use crate::qcqp::{self, QcqpSolution, QcqpSpec, SolveOptions};
use crate::scene::{ChannelSet, ErrorBounds, SymbolSlot};

/// `Γ(σ_C² + P_R(‖f̂‖ + δ_f)²)`
pub fn worst_case_gamma(gamma: f64, f_hat: &CVector, delta_f: f64, sigma_c2: f64, p_r: f64) -> f64 {
    if delta_f == 0.0 {
        return gamma * (sigma_c2 + p_r * f_hat.norm_squared());
    }
    let r = f_hat.norm() + delta_f;
    gamma * (sigma_c2 + p_r * r * r)
}

/// Quadratic form `w₂ᵀQw₂ ≤ Rσ_R²` bounding the INR on one radar antenna for
/// every `‖e_g‖ ≤ δ_g`; `beta` is the estimate's 2N×2 block.
pub fn robust_inr_constraint(beta: &RMatrix, delta_g: f64, inr_cap: f64, sigma_r2: f64) -> (RMatrix, f64) {
    let mut q = beta * beta.transpose();
    if delta_g > 0.0 {
        let g_norm = beta.column(0).norm();
        let kappa = 2.0 * delta_g * delta_g + 4.0 * delta_g * g_norm;
        for i in 0..q.nrows() {
            q[(i, i)] += kappa;
        }
    }
    (q, inr_cap * sigma_r2)
}

/// One worst-case CI row: `‖C w₂‖ ≤ dᵀw₂ + e`, or the linear row `−dᵀw₂ ≤ e` when `δ_h = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum SinrRow {
    Linear { a: RVector, b: f64 },
    Cone { c_mat: RMatrix, d: RVector, e: f64 },
}

/// Both worst-case CI rows for one user, given the rotated, realified estimate `h̄`.
pub fn robust_sinr_constraints(h_bar: &RVector, delta_h: f64, inflated_target: f64, psi: f64) -> [SinrRow; 2] {
    let n2 = h_bar.len();
    let pi = rotation_matrix(n2 / 2);
    let tan = psi.tan();
    let offset = inflated_target.sqrt() * tan;
    let b = pi.tr_mul(h_bar);
    let row = |sign: f64| {
        // d = (tanψ·I ∓ Π)ᵀh̄
        let d = h_bar * tan - &b * sign;
        if delta_h == 0.0 {
            SinrRow::Linear { a: -d, b: -offset }
        } else {
            let c_mat = (RMatrix::identity(n2, n2) * tan - &pi * sign) * delta_h;
            SinrRow::Cone { c_mat, d, e: -offset }
        }
    };
    [row(1.0), row(-1.0)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustCiProblem {
    /// Realified estimate with `Γ̃` already inflated by `δ_f`.
    pub nominal: CiProblem,
    pub bounds: ErrorBounds,
    /// `2δ_g² + 4δ_g‖ḡₘ‖` per antenna.
    pub inr_inflation: Vec<f64>,
}

impl RobustCiProblem {
    /// Build from the estimated channels of `cs` (or `cs` itself when it carries no estimate).
    pub fn build(cs: &ChannelSet, slot: &SymbolSlot, budget: &LinkBudget, bounds: ErrorBounds) -> Result<Self> {
        if [bounds.delta_h, bounds.delta_g, bounds.delta_f].iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidArgument(format!("error bounds must be nonnegative: {bounds:?}")));
        }
        let est = cs.known();
        let mut rot = rotate_channels(&est, slot, budget)?;
        for (i, g) in rot.gamma_tilde.iter_mut().enumerate() {
            let f_hat = if est.f.nrows() == 0 { CVector::zeros(0) } else { est.f_col(i) };
            *g = worst_case_gamma(budget.gamma(i), &f_hat, bounds.delta_f, budget.sigma_c2, budget.p_r);
        }
        let inr_inflation = rot
            .g
            .iter()
            .map(|g| {
                let d = bounds.delta_g;
                2.0 * d * d + 4.0 * d * realify(g).norm()
            })
            .collect();
        Ok(Self { nominal: realify_problem(&rot), bounds, inr_inflation })
    }

    pub fn to_qcqp(&self) -> QcqpSpec {
        let p = &self.nominal;
        let dim = 2 * p.n;
        let mut spec = QcqpSpec::new(RMatrix::identity(dim, dim), RVector::zeros(dim));
        let rows: Vec<[SinrRow; 2]> = (0..p.k())
            .map(|i| robust_sinr_constraints(&p.h_bar[i], self.bounds.delta_h, p.gamma_tilde[i], p.psi))
            .collect();
        // Same order as the nominal problem: every user's first row, then every second row.
        for side in 0..2 {
            for row in rows.iter().map(|r| r[side].clone()) {
                match row {
                    SinrRow::Linear { a, b } => spec.add_linear(a, b),
                    SinrRow::Cone { c_mat, d, e } => spec.add_cone(c_mat, RVector::zeros(dim), d, e),
                };
            }
        }
        for (beta, cap) in p.beta.iter().zip(&p.inr_caps) {
            if cap.is_finite() {
                let (q, r) = robust_inr_constraint(beta, self.bounds.delta_g, *cap, p.sigma_r2);
                spec.add_quadratic(q, RVector::zeros(dim), r);
            }
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSolution {
    /// Margins and INR are reported against the estimated channels.
    pub solution: BeamformingSolution,
    pub engine: QcqpSolution,
}

/// Minimise `‖w‖²` subject to the worst-case constraints.
pub fn solve_robust(problem: &RobustCiProblem, opts: &SolveOptions) -> Result<RobustSolution> {
    let engine = qcqp::solve(&problem.to_qcqp(), None, opts)?;
    Ok(RobustSolution { solution: problem.nominal.solution_from_w2(&engine.x), engine })
}

/// Worst nominal-constraint violation of `w₂` on one channel realisation.
///
/// Positive values are violations: CI rows in mW^½, INR rows in linear INR units.
pub fn realisation_violation(truth: &ChannelSet, slot: &SymbolSlot, budget: &LinkBudget, w2: &RVector) -> Result<f64> {
    let p = CiProblem::build(&ChannelSet { estimate: None, ..truth.clone() }, slot, budget)?;
    let ci = p.ci_slack(w2).into_iter().map(|s| -s).fold(f64::NEG_INFINITY, f64::max);
    let inr = p
        .interference(w2)
        .iter()
        .zip(&p.inr_caps)
        .map(|(i, cap)| i / p.sigma_r2 - cap)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ci.max(inr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::{solve_gp, w2_from_complex, GpOptions};
    use crate::linalg::dot_t;
    use crate::scene::{gen_channels, psk_frame, rng_from_seed, sample_ball};
    use num_complex::Complex64;

    #[test]
    fn worst_case_gamma_values() {
        let f = CVector::from_vec(vec![Complex64::new(1.0, 1.0)]);
        assert_eq!(worst_case_gamma(100.0, &f, 0.0, 1.0, 1.0), 300.0);
        assert_eq!(worst_case_gamma(1.0, &CVector::zeros(3), 1.0, 1.0, 1.0), 2.0);
        let mut last = 0.0;
        for d in [0.0, 0.1, 0.2, 0.5] {
            let v = worst_case_gamma(2.0, &f, d, 1.0, 1.0);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn zero_bounds_reproduce_the_nominal_problem() {
        let cs = gen_channels(6, 3, 2, 4).unwrap();
        let slot = psk_frame(3, 1, 4, 4).unwrap().slot(0);
        let budget = LinkBudget::uniform(3, 2, 15.0, 3.0);
        let robust = RobustCiProblem::build(&cs, &slot, &budget, ErrorBounds::uniform(0.0)).unwrap();
        let nominal = CiProblem::build(&cs, &slot, &budget).unwrap();
        assert_eq!(robust.nominal, nominal);
        assert_eq!(robust.to_qcqp(), nominal.power_min_qcqp());
    }

    #[test]
    fn inr_bound_holds_under_sampled_errors() {
        let cs = gen_channels(5, 2, 2, 6).unwrap();
        let slot = psk_frame(2, 1, 4, 6).unwrap().slot(0);
        let p = CiProblem::build(&cs, &slot, &LinkBudget::uniform(2, 2, 10.0, 0.0)).unwrap();
        let mut rng = rng_from_seed(7);
        let delta = 0.1;
        let (q, _) = robust_inr_constraint(&p.beta[0], delta, 1.0, 1.0);
        let g_rot = cs.g_col(0) * crate::linalg::cis(slot.phases[0]);
        for _ in 0..1000 {
            let w = sample_ball(5, 3.0, &mut rng);
            let w2 = w2_from_complex(&w);
            let bound = w2.dot(&(&q * &w2));
            let truth = dot_t(&(&g_rot + sample_ball(5, delta, &mut rng)), &w).norm_sqr();
            assert!(truth <= bound + 1e-12);
        }
        let (q, r) = robust_inr_constraint(&p.beta[0], delta, 2.0, 1.0);
        assert_eq!(RVector::zeros(10).dot(&(&q * RVector::zeros(10))), 0.0);
        assert!(r >= 0.0);
    }

    #[test]
    fn zero_delta_matches_dual_solver() {
        let cs = gen_channels(8, 4, 4, 8).unwrap();
        let slot = psk_frame(4, 1, 4, 8).unwrap().slot(0);
        let budget = LinkBudget::uniform(4, 4, 15.0, 25.0);
        let rp = RobustCiProblem::build(&cs, &slot, &budget, ErrorBounds::uniform(0.0)).unwrap();
        let rob = solve_robust(&rp, &SolveOptions::default()).unwrap();
        let gp = solve_gp(&rp.nominal, &GpOptions::default()).unwrap();
        assert!((rob.solution.power - gp.solution.power).abs() < 1e-6 * gp.solution.power);
    }

    #[test]
    fn bigger_balls_cost_more_power() {
        let cs = gen_channels(8, 4, 4, 9).unwrap();
        let slot = psk_frame(4, 1, 4, 9).unwrap().slot(0);
        let budget = LinkBudget::uniform(4, 4, 10.0, 25.0);
        let mut last = 0.0;
        for d2 in [0.0, 1e-4, 2e-4, 4e-4] {
            let rp = RobustCiProblem::build(&cs, &slot, &budget, ErrorBounds::uniform(f64::sqrt(d2))).unwrap();
            let p = solve_robust(&rp, &SolveOptions::default()).unwrap().solution.power;
            assert!(p >= last * (1.0 - 1e-9), "{p} < {last}");
            last = p;
        }
    }

    #[test]
    fn huge_balls_are_infeasible() {
        let cs = gen_channels(4, 3, 2, 10).unwrap();
        let slot = psk_frame(3, 1, 4, 10).unwrap().slot(0);
        let rp = RobustCiProblem::build(&cs, &slot, &LinkBudget::uniform(3, 2, 10.0, 0.0), ErrorBounds::uniform(3.0)).unwrap();
        assert!(solve_robust(&rp, &SolveOptions::default()).unwrap_err().is_infeasible());
    }
}
