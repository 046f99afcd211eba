//! Shared helpers for integration tests.
#![allow(dead_code)]

use ci_radar::ci::LinkBudget;
use ci_radar::linalg::{CVector, RMatrix, RVector};
use ci_radar::qcqp::{self, QcqpSpec, SolveOptions};
use ci_radar::scene::ChannelSet;
use ci_radar::Result;
use num_complex::Complex64;

/// Real 2×2N block `R` with `R·[t_R; t_I] = [Re(hᵀt); Im(hᵀt)]`.
fn real_block(h: &CVector) -> RMatrix {
    let n = h.len();
    let mut r = RMatrix::zeros(2, 2 * n);
    for i in 0..n {
        r[(0, i)] = h[i].re;
        r[(0, n + i)] = -h[i].im;
        r[(1, i)] = h[i].im;
        r[(1, n + i)] = h[i].re;
    }
    r
}

/// Conventional block-level interference minimisation with fixed precoders:
/// minimise `Σₘ Σₖ |gₘᵀtₖ|²` subject to classical SINR targets and `Σ‖tₖ‖² ≤ P`.
///
/// The SINR rows are written as second-order cones after rotating each `tₖ` so
/// that `hₖᵀtₖ` is real, which loses nothing because every other term is
/// phase-invariant; the problem is then convex and solved exactly.
pub fn conventional_interf_min(cs: &ChannelSet, budget: &LinkBudget, power: f64) -> Result<Vec<CVector>> {
    conventional(cs, budget, Some(power))
}

/// Conventional block-level power minimisation under the same SINR targets.
pub fn conventional_power_min(cs: &ChannelSet, budget: &LinkBudget) -> Result<Vec<CVector>> {
    conventional(cs, budget, None)
}

fn conventional(cs: &ChannelSet, budget: &LinkBudget, power: Option<f64>) -> Result<Vec<CVector>> {
    let (n, k) = (cs.n(), cs.k());
    let dim = 2 * n * k;
    let mut q0 = RMatrix::zeros(dim, dim);
    if power.is_none() {
        q0.fill_with_identity();
    }
    for m in (0..cs.m()).filter(|_| power.is_some()) {
        let g = real_block(&cs.g_col(m));
        let gg = g.transpose() * &g;
        for u in 0..k {
            let off = 2 * n * u;
            let mut view = q0.view_mut((off, off), (2 * n, 2 * n));
            view += &gg;
        }
    }
    let mut spec = QcqpSpec::new(q0, RVector::zeros(dim));
    for i in 0..k {
        let h = real_block(&cs.h_col(i));
        let mut c_mat = RMatrix::zeros(2 * (k - 1) + 1, dim);
        let mut row = 0;
        for u in (0..k).filter(|&u| u != i) {
            c_mat.view_mut((row, 2 * n * u), (2, 2 * n)).copy_from(&h);
            row += 2;
        }
        let mut c = RVector::zeros(c_mat.nrows());
        let f2 = cs.f.column(i).norm_squared();
        c[c_mat.nrows() - 1] = (budget.p_r * f2 + budget.sigma_c2).sqrt();
        let mut d = RVector::zeros(dim);
        d.rows_mut(2 * n * i, 2 * n).copy_from(&(h.row(0).transpose() / budget.gamma(i).sqrt()));
        spec.add_cone(c_mat, c, d, 0.0);
    }
    if let Some(power) = power {
        spec.add_quadratic(RMatrix::identity(dim, dim), RVector::zeros(dim), power);
    }
    let sol = qcqp::solve(&spec, None, &SolveOptions::default())?;
    Ok((0..k)
        .map(|u| CVector::from_fn(n, |i, _| Complex64::new(sol.x[2 * n * u + i], sol.x[2 * n * u + n + i])))
        .collect())
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
