use serde::{Deserialize, Serialize};

use super::problem::LinkBudget;
use crate::error::{Error, Result};
use crate::linalg::{cis, dot_t, CVector};
use crate::scene::{ChannelSet, SymbolSlot};

/// Per-slot link performance of a set of precoders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Classical SINR per user, linear.
    pub sinr: Vec<f64>,
    /// INR per radar antenna with the slot's actual symbols, linear.
    pub inr: Vec<f64>,
    /// `‖Σ tₖ e^{j(φₖ−φ₁)}‖²`, mW.
    pub power: f64,
    /// `(Re zᵢ − √Γ̃ᵢ) tanψ − |Im zᵢ|` with `zᵢ` the noiseless receive point derotated by `φᵢ`.
    pub ci_margins: Vec<f64>,
}

/// Classical SINR of user `i` for precoders `t`.
pub fn sinr(cs: &ChannelSet, budget: &LinkBudget, t: &[CVector], i: usize) -> f64 {
    let h = cs.h_col(i);
    let signal = dot_t(&h, &t[i]).norm_sqr();
    let mui: f64 = t.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, tk)| dot_t(&h, tk).norm_sqr()).sum();
    let f_norm2 = if cs.f.nrows() == 0 { 0.0 } else { cs.f.column(i).norm_squared() };
    signal / (mui + budget.p_r * f_norm2 + budget.sigma_c2)
}

/// Evaluate precoders `t` (one per user) on the true channels for one symbol slot.
pub fn evaluate(cs: &ChannelSet, slot: &SymbolSlot, budget: &LinkBudget, t: &[CVector]) -> Result<Evaluation> {
    let (n, k, m) = (cs.n(), cs.k(), cs.m());
    if t.len() != k || t.iter().any(|v| v.len() != n) || slot.users() != k {
        return Err(Error::Dimension(format!("need {k} precoders of length {n} and a {k}-user slot")));
    }
    let mut x = CVector::zeros(n);
    for (tk, &phi) in t.iter().zip(&slot.phases) {
        x += tk * cis(phi);
    }
    let tan = slot.psi().tan();
    let ci_margins = (0..k)
        .map(|i| {
            let z = dot_t(&cs.h_col(i), &x) * cis(-slot.phases[i]);
            let f_norm2 = if cs.f.nrows() == 0 { 0.0 } else { cs.f.column(i).norm_squared() };
            let target = (budget.gamma(i) * (budget.sigma_c2 + budget.p_r * f_norm2)).sqrt();
            (z.re - target) * tan - z.im.abs()
        })
        .collect();
    Ok(Evaluation {
        sinr: (0..k).map(|i| sinr(cs, budget, t, i)).collect(),
        inr: (0..m).map(|j| dot_t(&cs.g_col(j), &x).norm_sqr() / budget.sigma_r2).collect(),
        power: (&x * cis(-slot.phases[0])).norm_squared(),
        ci_margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::{solve_gp, CiProblem, GpOptions};
    use crate::linalg::CMatrix;
    use crate::scene::{gen_channels, psk_frame};

    #[test]
    fn single_user_matched_filter() {
        let cs0 = gen_channels(4, 1, 1, 3).unwrap();
        let cs = ChannelSet::new(cs0.h.clone(), cs0.g.clone(), CMatrix::zeros(1, 1)).unwrap();
        let h = cs.h_col(0);
        let t = h.conjugate().unscale(h.norm());
        let budget = LinkBudget::uniform(1, 1, 0.0, 0.0);
        let ev = evaluate(&cs, &SymbolSlot::new(vec![0.4], 4).unwrap(), &budget, &[t]).unwrap();
        assert!((ev.sinr[0] - h.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn solver_output_meets_its_own_constraints() {
        let cs = gen_channels(8, 4, 4, 7).unwrap();
        let frame = psk_frame(4, 1, 4, 7).unwrap();
        let budget = LinkBudget::uniform(4, 4, 15.0, 0.0);
        let p = CiProblem::build(&cs, &frame.slot(0), &budget).unwrap();
        let out = solve_gp(&p, &GpOptions::default()).unwrap();
        let ev = evaluate(&cs, &frame.slot(0), &budget, &out.solution.precoders).unwrap();
        assert!((ev.power - out.solution.power).abs() < 1e-9 * ev.power);
        for i in 0..4 {
            assert!((ev.ci_margins[i] - out.solution.ci_margins[i]).abs() < 1e-8);
        }
        for j in 0..4 {
            assert!(ev.inr[j] <= 1.0 + 1e-6);
            assert!((ev.inr[j] - out.solution.inr[j]).abs() < 1e-9);
        }
        let total: f64 = out.solution.precoders.iter().map(|t| t.norm_squared()).sum();
        assert!((total - out.solution.power / 4.0).abs() < 1e-9);
    }
}
