use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_residual, hpd_inverse, min_hermitian_eigenvalue, CMatrix, CVector};

/// Interference covariance `J` seen by the radar, plus its noise floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceCovariance {
    #[serde(with = "crate::json::cmatrix")]
    pub j: CMatrix,
    pub sigma_r2: f64,
}

impl InterferenceCovariance {
    pub fn new(j: CMatrix, sigma_r2: f64) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::Dimension(format!("J is {}×{}", j.nrows(), j.ncols())));
        }
        if !(sigma_r2 > 0.0) {
            return Err(Error::InvalidArgument(format!("σ_R² must be positive, got {sigma_r2}")));
        }
        let scale = 1.0 + j.norm();
        if hermitian_residual(&j) > 1e-10 * scale || min_hermitian_eigenvalue(&j) < -1e-10 * scale {
            return Err(Error::Numerical("interference covariance is not Hermitian PSD".into()));
        }
        Ok(Self { j, sigma_r2 })
    }

    /// No communication interference at all.
    pub fn none(m: usize, sigma_r2: f64) -> Self {
        Self { j: CMatrix::zeros(m, m), sigma_r2 }
    }

    /// Block-level precoding with fixed beamformers: `J = Gᵀ Σ tₖtₖᴴ G*`.
    pub fn from_precoders(g: &CMatrix, t: &[CVector], sigma_r2: f64) -> Result<Self> {
        let m = g.ncols();
        let mut j = CMatrix::zeros(m, m);
        for tk in t {
            let u = g.transpose() * tk;
            j += &u * u.adjoint();
        }
        Self::new(hermitianize(j), sigma_r2)
    }

    /// Symbol-level precoding: `J = (1/L) Σ Gᵀw[l]w[l]ᴴG*`.
    pub fn from_slot_vectors(g: &CMatrix, w: &[CVector], sigma_r2: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidArgument("need at least one slot vector".into()));
        }
        let mut j = CMatrix::zeros(g.ncols(), g.ncols());
        for wl in w {
            let u = g.transpose() * wl;
            j += &u * u.adjoint();
        }
        Self::new(hermitianize(j.unscale(w.len() as f64)), sigma_r2)
    }

    pub fn m(&self) -> usize {
        self.j.nrows()
    }

    /// `J̃ = J + σ_R² I`
    pub fn j_tilde(&self) -> CMatrix {
        let mut jt = self.j.clone();
        for i in 0..jt.nrows() {
            jt[(i, i)] += self.sigma_r2;
        }
        jt
    }

    pub fn j_tilde_inverse(&self) -> Result<CMatrix> {
        hpd_inverse(&self.j_tilde())
    }
}

fn hermitianize(j: CMatrix) -> CMatrix {
    (&j + j.adjoint()).unscale(2.0)
}

/// `Ỹ = (1/√L) Σ_l y_l s_lᴴ` for received frames `Y` (M×L) and waveform `S` (M×L).
pub fn matched_filter(y: &CMatrix, s: &CMatrix) -> Result<CMatrix> {
    if y.ncols() != s.ncols() || y.ncols() == 0 {
        return Err(Error::Dimension(format!("frames have {} slots, waveform {}", y.ncols(), s.ncols())));
    }
    Ok((y * s.adjoint()).unscale((y.ncols() as f64).sqrt()))
}
