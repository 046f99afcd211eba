use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::problem::CiProblem;
use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};

/// Dual variables of the power-minimisation problem and convergence record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    /// `λ = [u; v]`, length 2K.
    pub lambda: Vec<f64>,
    /// One multiplier per radar antenna; zero where the cap is infinite.
    pub c: Vec<f64>,
    /// Dual objective in maximisation form, mW.
    pub dual_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// `‖z − max(z − ∇f, 0)‖∞` at the returned iterate.
    pub residual: f64,
    pub converged: bool,
    /// Accepted dual values (maximisation form), when tracing is on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

/// Minimisation-form dual `f(λ, c)` over the capped antennas of a problem.
///
/// `z = [λ; c_active]`, where the active set holds antennas with a finite cap.
#[derive(Debug, Clone)]
pub(crate) struct DualObjective<'a> {
    pub p: &'a CiProblem,
    pub active: Vec<usize>,
    offsets: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DualEval {
    pub value: f64,
    pub grad: RVector,
    /// `½M·Aλ`
    pub w2: RVector,
}

impl<'a> DualObjective<'a> {
    pub fn new(p: &'a CiProblem, with_inr: bool) -> Self {
        let active = if with_inr { (0..p.m()).filter(|&m| p.inr_caps[m].is_finite()).collect() } else { Vec::new() };
        let k = p.k();
        let offs = p.ci_offsets();
        let offsets = (0..2 * k).map(|j| offs[j % k]).collect();
        Self { p, active, offsets }
    }

    pub fn dim(&self) -> usize {
        2 * self.p.k() + self.active.len()
    }

    fn factor(&self, c: &[f64]) -> Result<Option<Cholesky<f64, nalgebra::Dyn>>> {
        if c.iter().all(|&x| x == 0.0) {
            return Ok(None);
        }
        let d = 2 * self.p.n;
        let mut mat = RMatrix::identity(d, d);
        for (&m, &cm) in self.active.iter().zip(c) {
            if cm != 0.0 {
                let b = &self.p.beta[m];
                mat.gemm(cm, b, &b.transpose(), 1.0);
            }
        }
        Cholesky::new(mat).map(Some).ok_or_else(|| Error::Numerical("dual system is not positive definite".into()))
    }

    pub fn eval(&self, z: &RVector) -> Result<DualEval> {
        let p = self.p;
        let k2 = 2 * p.k();
        let lam = z.rows(0, k2);
        let c = &z.as_slice()[k2..];
        let al = &p.a * lam;
        let mal = match self.factor(c)? {
            Some(ch) => ch.solve(&al),
            None => al.clone(),
        };
        let lin: f64 = lam.iter().zip(&self.offsets).map(|(l, s)| l * s).sum();
        let mut value = 0.25 * al.dot(&mal) - lin;
        let mut grad = RVector::zeros(z.len());
        let g_lam = p.a.tr_mul(&mal) * 0.5;
        for j in 0..k2 {
            grad[j] = g_lam[j] - self.offsets[j];
        }
        for (i, &m) in self.active.iter().enumerate() {
            let cap = p.inr_caps[m] * p.sigma_r2;
            value += cap * c[i];
            grad[k2 + i] = cap - 0.25 * p.beta[m].tr_mul(&mal).norm_squared();
        }
        Ok(DualEval { value, grad, w2: mal * 0.5 })
    }

    /// Scatter active multipliers back to a per-antenna vector.
    pub fn full_c(&self, z: &RVector) -> Vec<f64> {
        let k2 = 2 * self.p.k();
        let mut c = vec![0.0; self.p.m()];
        for (i, &m) in self.active.iter().enumerate() {
            c[m] = z[k2 + i];
        }
        c
    }
}

/// Dual value (minimisation form) and gradient at `(λ, c)`.
///
/// `c` has one entry per antenna; entries for uncapped antennas must be zero.
pub fn dual_value_and_gradient(p: &CiProblem, lambda: &[f64], c: &[f64]) -> Result<(f64, RVector)> {
    let k = p.k();
    if lambda.len() != 2 * k || c.len() != p.m() {
        return Err(Error::Dimension(format!("expected λ of length {} and c of length {}", 2 * k, p.m())));
    }
    if lambda.iter().chain(c).any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidArgument("dual variables must be finite and nonnegative".into()));
    }
    let obj = DualObjective::new(p, true);
    for m in 0..p.m() {
        if !p.inr_caps[m].is_finite() && c[m] != 0.0 {
            return Err(Error::InvalidArgument(format!("antenna {m} has no INR cap but c = {}", c[m])));
        }
    }
    let mut z = RVector::zeros(obj.dim());
    z.rows_mut(0, 2 * k).copy_from_slice(lambda);
    for (i, &m) in obj.active.iter().enumerate() {
        z[2 * k + i] = c[m];
    }
    let e = obj.eval(&z)?;
    let mut grad = RVector::zeros(2 * k + p.m());
    grad.rows_mut(0, 2 * k).copy_from(&e.grad.rows(0, 2 * k));
    for (i, &m) in obj.active.iter().enumerate() {
        grad[2 * k + m] = e.grad[2 * k + i];
    }
    Ok((e.value, grad))
}
