use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, J};

/// Antenna element positions in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    /// Uniform linear array along the first axis with half-wavelength spacing.
    pub fn ula(m: usize) -> Self {
        Self { positions: (0..m).map(|i| [i as f64 / 2.0, 0.0]).collect() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn steering(&self, theta: f64) -> CVector {
        steering_vector(theta, &self.positions)
    }

    pub fn outer(&self, theta: f64) -> CMatrix {
        steering_outer(theta, &self.positions)
    }

    pub fn outer_derivative(&self, theta: f64) -> CMatrix {
        steering_derivative(theta, &self.positions)
    }
}

/// `a(θ)ᵢ = exp(−j2π [sin θ, cos θ]·xᵢ)`, positions in wavelengths.
pub fn steering_vector(theta: f64, positions: &[[f64; 2]]) -> CVector {
    let (s, c) = theta.sin_cos();
    CVector::from_iterator(
        positions.len(),
        positions.iter().map(|x| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (s * x[0] + c * x[1]))),
    )
}

/// Elementwise dθ of [`steering_vector`].
pub fn steering_vector_derivative(theta: f64, positions: &[[f64; 2]]) -> CVector {
    let (s, c) = theta.sin_cos();
    let a = steering_vector(theta, positions);
    CVector::from_iterator(
        positions.len(),
        positions.iter().zip(a.iter()).map(|(x, ai)| {
            let dphase = -2.0 * std::f64::consts::PI * (c * x[0] - s * x[1]);
            ai * J * dphase
        }),
    )
}

/// `A(θ) = a(θ)a(θ)ᵀ` (plain transpose).
pub fn steering_outer(theta: f64, positions: &[[f64; 2]]) -> CMatrix {
    let a = steering_vector(theta, positions);
    &a * a.transpose()
}

/// `∂A/∂θ = ȧaᵀ + aȧᵀ`.
pub fn steering_derivative(theta: f64, positions: &[[f64; 2]]) -> CMatrix {
    let a = steering_vector(theta, positions);
    let da = steering_vector_derivative(theta, positions);
    &da * a.transpose() + &a * da.transpose()
}

/// Radar side of the scene: array, target and waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarScene {
    pub geometry: ArrayGeometry,
    /// Target direction, radians.
    pub theta: f64,
    /// Complex path loss.
    pub alpha: Complex64,
    /// Radar transmit power, mW.
    pub p_r: f64,
    /// M×L transmit waveform.
    #[serde(with = "crate::json::cmatrix")]
    pub waveform: CMatrix,
    /// Downlink user noise power, mW.
    pub sigma_c2: f64,
    /// Radar receiver noise power, mW.
    pub sigma_r2: f64,
}

impl RadarScene {
    pub fn new(geometry: ArrayGeometry, theta: f64, alpha: Complex64, p_r: f64, waveform: CMatrix, sigma_c2: f64, sigma_r2: f64) -> Result<Self> {
        if geometry.is_empty() {
            return Err(Error::InvalidArgument("array has no elements".into()));
        }
        if waveform.nrows() != geometry.len() {
            return Err(Error::Dimension(format!("waveform has {} rows for {} antennas", waveform.nrows(), geometry.len())));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::InvalidArgument("path loss must be finite".into()));
        }
        Ok(Self { geometry, theta, alpha, p_r, waveform, sigma_c2, sigma_r2 })
    }

    pub fn m(&self) -> usize {
        self.geometry.len()
    }

    /// Frame length L.
    pub fn frame_len(&self) -> usize {
        self.waveform.ncols()
    }

    /// `|α|² L P_R / σ_R²`.
    pub fn snr(&self) -> f64 {
        self.alpha.norm_sqr() * self.frame_len() as f64 * self.p_r / self.sigma_r2
    }

    /// Same scene with |α| scaled to hit a target radar SNR (linear).
    pub fn with_snr(&self, snr: f64) -> Self {
        let mag = (snr * self.sigma_r2 / (self.frame_len() as f64 * self.p_r)).sqrt();
        let phase = if self.alpha.norm() > 0.0 { self.alpha.arg() } else { 0.0 };
        Self { alpha: Complex64::from_polar(mag, phase), ..self.clone() }
    }

    pub fn steering_outer(&self) -> CMatrix {
        self.geometry.outer(self.theta)
    }
}
