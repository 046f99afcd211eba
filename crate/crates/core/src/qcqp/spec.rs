use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};

/// `aᵀx ≤ b`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    #[serde(with = "crate::json::rvector")]
    pub a: RVector,
    pub b: f64,
}

/// `xᵀQx + qᵀx ≤ r`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticConstraint {
    #[serde(with = "crate::json::rmatrix")]
    pub q_mat: RMatrix,
    #[serde(with = "crate::json::rvector")]
    pub q: RVector,
    pub r: f64,
}

/// `‖Cx + c‖ ≤ dᵀx + e`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConstraint {
    #[serde(with = "crate::json::rmatrix")]
    pub c_mat: RMatrix,
    #[serde(with = "crate::json::rvector")]
    pub c: RVector,
    #[serde(with = "crate::json::rvector")]
    pub d: RVector,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqpSpec {
    pub dim: usize,
    #[serde(with = "crate::json::rmatrix")]
    pub q0: RMatrix,
    #[serde(with = "crate::json::rvector")]
    pub q0_lin: RVector,
    pub linear: Vec<LinearConstraint>,
    pub quadratic: Vec<QuadraticConstraint>,
    pub cones: Vec<ConeConstraint>,
}

impl LinearConstraint {
    pub fn value(&self, x: &RVector) -> f64 {
        self.a.dot(x) - self.b
    }
}

impl QuadraticConstraint {
    pub fn value(&self, x: &RVector) -> f64 {
        x.dot(&(&self.q_mat * x)) + self.q.dot(x) - self.r
    }
}

impl ConeConstraint {
    /// `‖Cx + c‖ − (dᵀx + e)`; non-positive when satisfied.
    pub fn value(&self, x: &RVector) -> f64 {
        (&self.c_mat * x + &self.c).norm() - (self.d.dot(x) + self.e)
    }
}

impl QcqpSpec {
    /// `min xᵀQ₀x + q₀ᵀx` with no constraints yet.
    pub fn new(q0: RMatrix, q0_lin: RVector) -> Self {
        let dim = q0_lin.len();
        Self { dim, q0, q0_lin, linear: Vec::new(), quadratic: Vec::new(), cones: Vec::new() }
    }

    pub fn add_linear(&mut self, a: RVector, b: f64) -> &mut Self {
        self.linear.push(LinearConstraint { a, b });
        self
    }

    pub fn add_quadratic(&mut self, q_mat: RMatrix, q: RVector, r: f64) -> &mut Self {
        self.quadratic.push(QuadraticConstraint { q_mat, q, r });
        self
    }

    pub fn add_cone(&mut self, c_mat: RMatrix, c: RVector, d: RVector, e: f64) -> &mut Self {
        self.cones.push(ConeConstraint { c_mat, c, d, e });
        self
    }

    pub fn objective(&self, x: &RVector) -> f64 {
        x.dot(&(&self.q0 * x)) + self.q0_lin.dot(x)
    }

    /// Largest constraint violation at `x` (negative when strictly feasible).
    pub fn max_violation(&self, x: &RVector) -> f64 {
        self.linear
            .iter()
            .map(|c| c.value(x))
            .chain(self.quadratic.iter().map(|c| c.value(x)))
            .chain(self.cones.iter().map(|c| c.value(x)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Barrier complexity parameter: one per linear/quadratic constraint, two per cone.
    pub fn barrier_weight(&self) -> f64 {
        (self.linear.len() + self.quadratic.len() + 2 * self.cones.len()) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let finite = |m: &RMatrix| m.iter().all(|v| v.is_finite());
        let finite_v = |v: &RVector| v.iter().all(|x| x.is_finite());
        if self.q0.shape() != (n, n) || self.q0_lin.len() != n {
            return Err(Error::Dimension("objective dimensions disagree with dim".into()));
        }
        check_psd(&self.q0, "objective")?;
        if !finite(&self.q0) || !finite_v(&self.q0_lin) {
            return Err(Error::InvalidArgument("objective has non-finite coefficients".into()));
        }
        for (i, c) in self.linear.iter().enumerate() {
            if c.a.len() != n || !finite_v(&c.a) || !c.b.is_finite() {
                return Err(Error::InvalidArgument(format!("linear constraint {i} malformed")));
            }
        }
        for (i, c) in self.quadratic.iter().enumerate() {
            if c.q_mat.shape() != (n, n) || c.q.len() != n || !finite(&c.q_mat) || !finite_v(&c.q) || !c.r.is_finite() {
                return Err(Error::InvalidArgument(format!("quadratic constraint {i} malformed")));
            }
            check_psd(&c.q_mat, &format!("quadratic constraint {i}"))?;
        }
        for (i, c) in self.cones.iter().enumerate() {
            if c.c_mat.ncols() != n || c.c.len() != c.c_mat.nrows() || c.d.len() != n || !finite(&c.c_mat) || !c.e.is_finite() {
                return Err(Error::InvalidArgument(format!("cone constraint {i} malformed")));
            }
        }
        Ok(())
    }
}

fn check_psd(m: &RMatrix, what: &str) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    let scale = m.amax().max(1.0);
    if asym > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!("{what}: matrix is not symmetric")));
    }
    if m.nrows() == 0 {
        return Ok(());
    }
    // PSD test by factorising a slightly shifted copy
    let mut shifted = m.clone();
    for i in 0..m.nrows() {
        shifted[(i, i)] += 1e-10 * scale;
    }
    if nalgebra::Cholesky::new(shifted).is_none() {
        return Err(Error::InvalidArgument(format!("{what}: matrix is not positive semidefinite")));
    }
    Ok(())
}
