use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::covariance::InterferenceCovariance;
use crate::error::{Error, Result};
use crate::linalg::{trace_of_product, CMatrix};
use crate::scene::RadarScene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// rad²
    pub crb: f64,
    /// rad
    pub rmse: f64,
    pub xi_theta_theta: f64,
    pub xi_theta_alpha: [f64; 2],
    pub xi_alpha_alpha: f64,
}

struct Traces {
    /// `tr(AAᴴJ̃⁻¹)`
    aa: f64,
    /// `tr(ȦȦᴴJ̃⁻¹)`
    dd: f64,
    /// `tr(AȦᴴJ̃⁻¹)`
    ad: num_complex::Complex64,
}

fn traces(a: &CMatrix, da: &CMatrix, ji: &CMatrix) -> Traces {
    Traces {
        aa: trace_of_product(a, &(a.adjoint() * ji)).re,
        dd: trace_of_product(da, &(da.adjoint() * ji)).re,
        ad: trace_of_product(a, &(da.adjoint() * ji)),
    }
}

/// DoA Cramér–Rao bound at the scene's angle, with disturbance `cov` and radar SNR `snr` (linear).
pub fn crb(scene: &RadarScene, cov: &InterferenceCovariance, snr: f64) -> Result<CrbReport> {
    if scene.m() < 2 {
        return Err(Error::DegenerateGeometry(format!("{} antenna(s) cannot resolve angle", scene.m())));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be positive, got {snr}")));
    }
    let a = scene.geometry.outer(scene.theta);
    let da = scene.geometry.outer_derivative(scene.theta);
    let t = traces(&a, &da, &cov.j_tilde_inverse()?);
    let denom = t.dd * t.aa - t.ad.norm_sqr();
    if denom <= 1e-12 * (t.dd * t.aa).max(1.0) {
        return Err(Error::DegenerateGeometry(format!("Fisher information is singular (denominator {denom:.3e})")));
    }
    let crb = t.aa / (2.0 * snr * cov.sigma_r2 * denom);
    // FIM blocks with |α| rescaled so that |α|²LP_R/σ_R² = SNR, keeping the scene's phase.
    let lp = scene.frame_len() as f64 * scene.p_r;
    let phase = if scene.alpha.norm() > 0.0 { scene.alpha.arg() } else { 0.0 };
    let alpha = num_complex::Complex64::from_polar((snr * cov.sigma_r2 / lp).sqrt(), phase);
    let cross = alpha.conj() * t.ad;
    Ok(CrbReport {
        crb,
        rmse: crb.sqrt(),
        xi_theta_theta: 2.0 * snr * cov.sigma_r2 * t.dd,
        xi_theta_alpha: [2.0 * lp * cross.re, -2.0 * lp * cross.im],
        xi_alpha_alpha: 2.0 * lp * t.aa,
    })
}

/// Same bound through the explicit 3×3 Fisher matrix over `(θ, Re α, Im α)`.
pub fn crb_via_fim(scene: &RadarScene, cov: &InterferenceCovariance) -> Result<f64> {
    let a = scene.geometry.outer(scene.theta);
    let da = scene.geometry.outer_derivative(scene.theta);
    let t = traces(&a, &da, &cov.j_tilde_inverse()?);
    let lp = scene.frame_len() as f64 * scene.p_r;
    let alpha = scene.alpha;
    // ∂μ/∂θ = α√(LP)Ȧ, ∂μ/∂Re α = √(LP)A, ∂μ/∂Im α = j√(LP)A; FIM = 2 Re⟨∂μᵢ, ∂μⱼ⟩_{J̃⁻¹}
    let cross = alpha.conj() * t.ad;
    let x_tt = 2.0 * lp * alpha.norm_sqr() * t.dd;
    let x_tr = 2.0 * lp * cross.re;
    let x_ti = 2.0 * lp * (cross * crate::linalg::J).re;
    let x_aa = 2.0 * lp * t.aa;
    let fim = Matrix3::new(x_tt, x_tr, x_ti, x_tr, x_aa, 0.0, x_ti, 0.0, x_aa);
    let inv = fim
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("Fisher information matrix is singular".into()))?;
    Ok(inv[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cis, CVector};
    use crate::scene::{radar_waveform, rng_from_seed, sample_ball, ArrayGeometry, WaveformMode};
    use num_complex::Complex64;
    use rand::Rng;

    fn scene(m: usize, theta: f64, alpha: Complex64) -> RadarScene {
        let s = radar_waveform(m, 40, WaveformMode::Orthonormal, 1).unwrap();
        RadarScene::new(ArrayGeometry::ula(m), theta, alpha, 1.0, s, 1.0, 1.0).unwrap()
    }

    #[test]
    fn doubling_snr_halves_the_bound() {
        let sc = scene(4, 0.3, Complex64::new(1.0, 0.0));
        let cov = InterferenceCovariance::none(4, 1.0);
        let a = crb(&sc, &cov, 10.0).unwrap().crb;
        let b = crb(&sc, &cov, 20.0).unwrap().crb;
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interference_free_traces() {
        let sc = scene(4, -0.2, Complex64::new(1.0, 0.0));
        let cov = InterferenceCovariance::none(4, 2.0);
        let a = sc.geometry.outer(sc.theta);
        let da = sc.geometry.outer_derivative(sc.theta);
        let aa: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0;
        let dd: f64 = da.iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0;
        let ad = a.iter().zip(da.iter()).map(|(x, y)| x * y.conj()).sum::<Complex64>() / 2.0;
        let expect = aa / (2.0 * 5.0 * 2.0 * (dd * aa - ad.norm_sqr()));
        assert!((crb(&sc, &cov, 5.0).unwrap().crb - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn closed_form_matches_fisher_matrix() {
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            let theta = rng.random_range(-1.4..1.4);
            let alpha = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let sc = scene(4, theta, alpha);
            let u: Vec<CVector> = (0..3).map(|_| sample_ball(4, 3.0, &mut rng)).collect();
            let mut j = crate::linalg::CMatrix::zeros(4, 4);
            for v in &u {
                j += v * v.adjoint();
            }
            let cov = InterferenceCovariance::new(j, 1.0).unwrap();
            let closed = crb(&sc, &cov, sc.snr()).unwrap().crb;
            let fim = crb_via_fim(&sc, &cov).unwrap();
            assert!((closed - fim).abs() < 1e-10 * fim, "{closed} vs {fim}");
        }
    }

    #[test]
    fn single_antenna_is_degenerate() {
        let sc = scene(1, 0.3, cis(0.0));
        let err = crb(&sc, &InterferenceCovariance::none(1, 1.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }
}
