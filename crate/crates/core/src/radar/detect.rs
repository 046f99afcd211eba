use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse, trace_of_product, CMatrix};

/// `|tr(Ỹ Aᴴ J̃⁻¹)|² / tr(A Aᴴ J̃⁻¹)`
pub fn glrt_statistic(y_tilde: &CMatrix, a: &CMatrix, j_tilde: &CMatrix) -> Result<f64> {
    let ji = hpd_inverse(j_tilde)?;
    Ok(Detector::with_inverse(a, &ji).statistic(y_tilde))
}

/// Precomputed `B = AᴴJ̃⁻¹` and `tr(AAᴴJ̃⁻¹)` for one hypothesised angle.
#[derive(Debug, Clone)]
pub struct Detector {
    b: CMatrix,
    energy: f64,
}

impl Detector {
    pub fn with_inverse(a: &CMatrix, j_tilde_inv: &CMatrix) -> Self {
        let b = a.adjoint() * j_tilde_inv;
        let energy = trace_of_product(a, &b).re;
        Self { b, energy }
    }

    pub fn statistic(&self, y_tilde: &CMatrix) -> f64 {
        trace_of_product(y_tilde, &self.b).norm_sqr() / self.energy
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }
}

/// Threshold on a central χ²₂ statistic giving false-alarm rate `p_fa`: `−2 ln P_FA`.
pub fn detection_threshold(p_fa: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidArgument(format!("P_FA must lie in (0, 1), got {p_fa}")));
    }
    Ok(-2.0 * p_fa.ln())
}

/// False-alarm rate of threshold `eta` on a central χ²₂ statistic.
pub fn false_alarm_probability(eta: f64) -> f64 {
    (-eta / 2.0).exp().min(1.0)
}

/// Threshold given in decibels of the statistic, `10^(dB/10)`.
pub fn threshold_from_db(db: f64) -> f64 {
    crate::units::db_to_linear(db)
}

/// `ρ = SNR_R σ_R² tr(A Aᴴ J̃⁻¹)`
pub fn noncentrality(snr: f64, sigma_r2: f64, a: &CMatrix, j_tilde: &CMatrix) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be nonnegative, got {snr}")));
    }
    let ji = hpd_inverse(j_tilde)?;
    Ok(snr * sigma_r2 * trace_of_product(a, &(a.adjoint() * ji)).re)
}

/// Non-centrality of the normalised statistic `2T`, which is exactly χ²₂(2ρ) under
/// complex Gaussian disturbance.
pub fn effective_noncentrality(rho: f64) -> f64 {
    2.0 * rho
}

/// `P_D = Q₁(√ρ, √η)` with `η = −2 ln P_FA`.
pub fn detection_probability(rho: f64, p_fa: f64) -> Result<f64> {
    let eta = detection_threshold(p_fa)?;
    marcum_q1(rho.sqrt(), eta.sqrt())
}

/// `Q₁(a, b) = P(X > b²)` for `X ~ χ²₂(a²)`, as a Poisson mixture of Erlang tails.
///
/// Both `Q₁` and `1 − Q₁` are summed from positive terms and the smaller one is
/// used, so values near 1 keep full relative accuracy in their complement.
/// The mixture is truncated 40 standard deviations past each Poisson mean, far
/// beyond where terms drop below 10⁻¹² of the total.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("Marcum Q needs finite a, b ≥ 0, got ({a}, {b})")));
    }
    let lam = a * a / 2.0;
    let x = b * b / 2.0;
    if x == 0.0 {
        return Ok(1.0);
    }
    let span = |mu: f64| (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
    let jmax = span(lam);
    let imax = jmax.max(span(x));
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=imax).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let pmf = |mu: f64, i: usize| {
        if mu == 0.0 {
            if i == 0 { 1.0 } else { 0.0 }
        } else {
            (-mu + i as f64 * mu.ln() - ln_fact[i]).exp()
        }
    };
    let px: Vec<f64> = (0..=imax).map(|i| pmf(x, i)).collect();
    let mut cdf = vec![0.0; imax + 1];
    let mut acc = 0.0;
    for i in 0..=imax {
        acc += px[i];
        cdf[i] = acc.min(1.0);
    }
    let mut tail = vec![0.0; imax + 1];
    let mut acc = 0.0;
    for i in (0..imax).rev() {
        acc += px[i + 1];
        tail[i] = acc.min(1.0);
    }
    // Q₁ = Σ_j Pois(j; λ)·P(Pois(x) ≤ j),  1 − Q₁ = Σ_j Pois(j; λ)·P(Pois(x) > j)
    let (mut q, mut p) = (0.0, 0.0);
    for j in 0..=jmax {
        let w = pmf(lam, j);
        q += w * cdf[j];
        p += w * tail[j];
    }
    Ok(if q <= p { q } else { 1.0 - p }.clamp(0.0, 1.0))
}

/// Wilson score interval for `k` successes out of `n`, at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Analytic and simulated detection performance at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub snr_db: f64,
    /// `ρ` as defined on the raw statistic.
    pub rho: f64,
    /// Threshold on the normalised statistic `2T`.
    pub eta: f64,
    pub p_fa: f64,
    pub pd_analytic: f64,
    pub pd_empirical: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: u64,
}
