use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{rng_from_seed, Rng};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Norm bounds on the per-column channel errors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBounds {
    pub delta_h: f64,
    pub delta_g: f64,
    pub delta_f: f64,
}

impl ErrorBounds {
    pub fn uniform(delta: f64) -> Self {
        Self { delta_h: delta, delta_g: delta, delta_f: delta }
    }

    pub fn is_zero(&self) -> bool {
        self.delta_h == 0.0 && self.delta_g == 0.0 && self.delta_f == 0.0
    }
}

/// Channel estimates known to the transmitter together with their error bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    #[serde(with = "crate::json::cmatrix")]
    pub h: CMatrix,
    #[serde(with = "crate::json::cmatrix")]
    pub g: CMatrix,
    #[serde(with = "crate::json::cmatrix")]
    pub f: CMatrix,
    pub bounds: ErrorBounds,
}

/// Downlink, BS→radar and radar→user channels.
///
/// * `h`: N×K, column i is the channel to user i
/// * `g`: N×M, column m is the channel to radar receive antenna m
/// * `f`: M×K, column i is the radar-transmitter channel to user i
///
/// When produced by [`perturb_channels`], `h`, `g`, `f` are the true
/// channels and `estimate` holds what the transmitter knows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    #[serde(with = "crate::json::cmatrix")]
    pub h: CMatrix,
    #[serde(with = "crate::json::cmatrix")]
    pub g: CMatrix,
    #[serde(with = "crate::json::cmatrix")]
    pub f: CMatrix,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<ChannelEstimate>,
}

impl ChannelSet {
    pub fn new(h: CMatrix, g: CMatrix, f: CMatrix) -> Result<Self> {
        let cs = Self { h, g, f, seed: None, estimate: None };
        cs.validate()?;
        Ok(cs)
    }

    /// BS antennas.
    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// Users.
    pub fn k(&self) -> usize {
        self.h.ncols()
    }

    /// Radar antennas.
    pub fn m(&self) -> usize {
        self.g.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k, m) = (self.n(), self.k(), self.m());
        if self.g.nrows() != n {
            return Err(Error::Dimension(format!("G has {} rows, expected N={n}", self.g.nrows())));
        }
        if self.f.ncols() != k {
            return Err(Error::Dimension(format!("F has {} columns, expected K={k}", self.f.ncols())));
        }
        if self.f.nrows() != m && !(m == 0 || self.f.nrows() == 0) {
            return Err(Error::Dimension(format!("F has {} rows, expected M={m}", self.f.nrows())));
        }
        Ok(())
    }

    pub fn h_col(&self, i: usize) -> CVector {
        self.h.column(i).into_owned()
    }

    pub fn g_col(&self, m: usize) -> CVector {
        self.g.column(m).into_owned()
    }

    pub fn f_col(&self, i: usize) -> CVector {
        self.f.column(i).into_owned()
    }

    /// The channels the transmitter designs against: the estimates if present,
    /// the (perfectly known) channels otherwise.
    pub fn known(&self) -> ChannelSet {
        match &self.estimate {
            Some(e) => ChannelSet { h: e.h.clone(), g: e.g.clone(), f: e.f.clone(), seed: self.seed, estimate: None },
            None => ChannelSet { estimate: None, ..self.clone() },
        }
    }

    pub fn bounds(&self) -> ErrorBounds {
        self.estimate.as_ref().map(|e| e.bounds).unwrap_or_default()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cs: ChannelSet = serde_json::from_str(s)?;
        cs.validate()?;
        Ok(cs)
    }
}

fn complex_gaussian(rng: &mut Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> CMatrix {
    // column-major fill order; part of the determinism contract
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// i.i.d. CN(0, 1) channels for `n` BS antennas, `k` users and `m` radar antennas.
pub fn gen_channels(n: usize, k: usize, m: usize, seed: u64) -> Result<ChannelSet> {
    if n == 0 || k == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("channel dims must be >= 1, got n={n} k={k} m={m}")));
    }
    let mut rng = rng_from_seed(seed);
    let h = gaussian_matrix(n, k, &mut rng);
    let g = gaussian_matrix(n, m, &mut rng);
    let f = gaussian_matrix(m, k, &mut rng);
    Ok(ChannelSet { h, g, f, seed: Some(seed), estimate: None })
}

/// Uniform sample inside the complex ball `{e ∈ ℂⁿ : ‖e‖ ≤ radius}`.
pub fn sample_ball(n: usize, radius: f64, rng: &mut Rng) -> CVector {
    let dir = sample_sphere(n, 1.0, rng);
    let u: f64 = rng.random();
    dir * Complex64::new(radius * u.powf(1.0 / (2 * n) as f64), 0.0)
}

/// Uniform sample on the sphere `‖e‖ = radius`.
pub fn sample_sphere(n: usize, radius: f64, rng: &mut Rng) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| complex_gaussian(rng));
        let norm = v.norm();
        if norm > 1e-300 {
            return v * Complex64::new(radius / norm, 0.0);
        }
    }
}

fn perturb_columns(m: &CMatrix, delta: f64, rng: &mut Rng) -> CMatrix {
    let mut out = m.clone();
    if delta == 0.0 {
        return out;
    }
    for j in 0..m.ncols() {
        let e = sample_ball(m.nrows(), delta, rng);
        let mut col = out.column_mut(j);
        col += e;
    }
    out
}

/// Treat `cs` as the transmitter's estimate and draw true channels whose
/// per-column errors lie uniformly inside balls of the given radii.
pub fn perturb_channels(cs: &ChannelSet, bounds: ErrorBounds, seed: u64) -> Result<ChannelSet> {
    if bounds.delta_h < 0.0 || bounds.delta_g < 0.0 || bounds.delta_f < 0.0 {
        return Err(Error::InvalidArgument("error bounds must be non-negative".into()));
    }
    let known = cs.known();
    let mut rng = rng_from_seed(seed);
    let h = perturb_columns(&known.h, bounds.delta_h, &mut rng);
    let g = perturb_columns(&known.g, bounds.delta_g, &mut rng);
    let f = perturb_columns(&known.f, bounds.delta_f, &mut rng);
    Ok(ChannelSet {
        h,
        g,
        f,
        seed: cs.seed,
        estimate: Some(ChannelEstimate { h: known.h, g: known.g, f: known.f, bounds }),
    })
}
