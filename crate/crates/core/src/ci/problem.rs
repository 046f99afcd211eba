use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, realify, CVector, RMatrix, RVector};
use crate::qcqp::QcqpSpec;
use crate::scene::{ChannelSet, SymbolSlot};
use crate::units::db_to_linear;

/// Service targets and noise levels shared by every symbol slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Per-user SINR targets Γᵢ, dB.
    pub gamma_db: Vec<f64>,
    /// Per-radar-antenna INR caps Rₘ, dB. `+inf` removes the cap.
    #[serde(with = "crate::json::uncapped")]
    pub inr_db: Vec<f64>,
    /// Downlink noise power σ_C², mW.
    pub sigma_c2: f64,
    /// Radar noise power σ_R², mW.
    pub sigma_r2: f64,
    /// Radar transmit power P_R, mW.
    pub p_r: f64,
}

impl LinkBudget {
    /// Equal targets for all users and antennas, unit noise and radar power.
    pub fn uniform(k: usize, m: usize, gamma_db: f64, inr_db: f64) -> Self {
        Self { gamma_db: vec![gamma_db; k], inr_db: vec![inr_db; m], sigma_c2: 1.0, sigma_r2: 1.0, p_r: 1.0 }
    }

    pub fn gamma(&self, i: usize) -> f64 {
        db_to_linear(self.gamma_db[i])
    }

    pub fn inr_cap(&self, m: usize) -> f64 {
        db_to_linear(self.inr_db[m])
    }

    /// Copy with every SINR target shifted to `gamma_db`.
    pub fn with_gamma_db(&self, gamma_db: f64) -> Self {
        Self { gamma_db: vec![gamma_db; self.gamma_db.len()], ..self.clone() }
    }

    pub fn with_inr_db(&self, inr_db: f64) -> Self {
        Self { inr_db: vec![inr_db; self.inr_db.len()], ..self.clone() }
    }
}

/// Channels rotated into the virtual-multicast frame of one symbol slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedChannels {
    /// `h̃ᵢ = hᵢ e^{j(φ₁−φᵢ)}`
    pub h: Vec<CVector>,
    /// `g̃ₘ = gₘ e^{jφ₁}`
    pub g: Vec<CVector>,
    /// `Γ̃ᵢ = Γᵢ(σ_C² + P_R‖fᵢ‖²)`, mW
    pub gamma_tilde: Vec<f64>,
    /// Linear INR caps.
    pub inr_caps: Vec<f64>,
    pub sigma_r2: f64,
    pub psi: f64,
    pub phases: Vec<f64>,
}

/// Rotate a channel set into the frame of `slot` (user 1 is the phase reference).
pub fn rotate_channels(cs: &ChannelSet, slot: &SymbolSlot, budget: &LinkBudget) -> Result<RotatedChannels> {
    let (k, m) = (cs.k(), cs.m());
    if slot.users() != k {
        return Err(Error::Dimension(format!("slot has {} phases for {k} users", slot.users())));
    }
    if budget.gamma_db.len() != k || budget.inr_db.len() != m {
        return Err(Error::Dimension("link budget does not match K/M".into()));
    }
    let phi1 = slot.phases[0];
    let h = (0..k).map(|i| cs.h_col(i) * cis(phi1 - slot.phases[i])).collect();
    let g = (0..m).map(|j| cs.g_col(j) * cis(phi1)).collect();
    let gamma_tilde = (0..k)
        .map(|i| {
            let f_norm2 = if cs.f.nrows() == 0 { 0.0 } else { cs.f.column(i).norm_squared() };
            budget.gamma(i) * (budget.sigma_c2 + budget.p_r * f_norm2)
        })
        .collect();
    Ok(RotatedChannels {
        h,
        g,
        gamma_tilde,
        inr_caps: (0..m).map(|j| budget.inr_cap(j)).collect(),
        sigma_r2: budget.sigma_r2,
        psi: slot.psi(),
        phases: slot.phases.clone(),
    })
}

/// `Π = [0 −I; I 0]` with N×N blocks.
pub fn rotation_matrix(n: usize) -> RMatrix {
    let mut pi = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        pi[(i, n + i)] = -1.0;
        pi[(n + i, i)] = 1.0;
    }
    pi
}

/// `β = [g_R g_I; g_I −g_R]` (2N×2), so that `|gᵀw|² = ‖βᵀw₂‖²`.
pub fn radar_block(g: &CVector) -> RMatrix {
    let n = g.len();
    let mut beta = RMatrix::zeros(2 * n, 2);
    for i in 0..n {
        beta[(i, 0)] = g[i].re;
        beta[(n + i, 0)] = g[i].im;
        beta[(i, 1)] = g[i].im;
        beta[(n + i, 1)] = -g[i].re;
    }
    beta
}

/// `w₂ = [w_R; −w_I]`
pub fn w2_from_complex(w: &CVector) -> RVector {
    let n = w.len();
    RVector::from_fn(2 * n, |i, _| if i < n { w[i].re } else { -w[i - n].im })
}

pub fn complex_from_w2(w2: &RVector) -> CVector {
    let n = w2.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(w2[i], -w2[n + i]))
}

/// Real-valued data of the CI power-minimisation problem for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiProblem {
    pub n: usize,
    /// `h̄ᵢ = [Re h̃ᵢ; Im h̃ᵢ]`
    #[serde(with = "vec_rvector")]
    pub h_bar: Vec<RVector>,
    /// `bᵢ = Πᵀh̄ᵢ`
    #[serde(with = "vec_rvector")]
    pub b: Vec<RVector>,
    /// `βₘ`, 2N×2 each.
    #[serde(with = "vec_rmatrix")]
    pub beta: Vec<RMatrix>,
    pub gamma_tilde: Vec<f64>,
    #[serde(with = "crate::json::uncapped")]
    pub inr_caps: Vec<f64>,
    pub sigma_r2: f64,
    pub psi: f64,
    pub phases: Vec<f64>,
    /// `A = [h̄ tanψ − b, h̄ tanψ + b]`, 2N×2K.
    #[serde(with = "crate::json::rmatrix")]
    pub a: RMatrix,
}

mod vec_rvector {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[RVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<RVector>, D::Error> {
        Ok(Vec::<Vec<f64>>::deserialize(d)?.into_iter().map(RVector::from_vec).collect())
    }
}

mod vec_rmatrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "crate::json::rmatrix")] RMatrix);

    pub fn serialize<S: Serializer>(v: &[RMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<Wrapped> = v.iter().map(|m| Wrapped(m.clone())).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<RMatrix>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

/// Real representation of rotated channels.
pub fn realify_problem(rot: &RotatedChannels) -> CiProblem {
    let n = rot.h.first().or(rot.g.first()).map(|v| v.len()).unwrap_or(0);
    let pi_t = rotation_matrix(n).transpose();
    let h_bar: Vec<RVector> = rot.h.iter().map(realify).collect();
    let b: Vec<RVector> = h_bar.iter().map(|h| &pi_t * h).collect();
    let beta = rot.g.iter().map(radar_block).collect();
    let k = h_bar.len();
    let tan = rot.psi.tan();
    let mut a = RMatrix::zeros(2 * n, 2 * k);
    for i in 0..k {
        a.set_column(i, &(&h_bar[i] * tan - &b[i]));
        a.set_column(k + i, &(&h_bar[i] * tan + &b[i]));
    }
    CiProblem {
        n,
        h_bar,
        b,
        beta,
        gamma_tilde: rot.gamma_tilde.clone(),
        inr_caps: rot.inr_caps.clone(),
        sigma_r2: rot.sigma_r2,
        psi: rot.psi,
        phases: rot.phases.clone(),
        a,
    }
}

impl CiProblem {
    /// Rotate and realify in one go.
    pub fn build(cs: &ChannelSet, slot: &SymbolSlot, budget: &LinkBudget) -> Result<Self> {
        Ok(realify_problem(&rotate_channels(cs, slot, budget)?))
    }

    pub fn k(&self) -> usize {
        self.h_bar.len()
    }

    pub fn m(&self) -> usize {
        self.beta.len()
    }

    pub fn tan_psi(&self) -> f64 {
        self.psi.tan()
    }

    /// `√Γ̃ᵢ tanψ` for each user.
    pub fn ci_offsets(&self) -> Vec<f64> {
        let tan = self.tan_psi();
        self.gamma_tilde.iter().map(|g| g.sqrt() * tan).collect()
    }

    /// Same problem with every Γ̃ᵢ scaled by `s`.
    pub fn scale_targets(&self, s: f64) -> Self {
        Self { gamma_tilde: self.gamma_tilde.iter().map(|g| g * s).collect(), ..self.clone() }
    }

    pub fn without_inr_caps(&self) -> Self {
        Self { inr_caps: vec![f64::INFINITY; self.m()], ..self.clone() }
    }

    /// Per-user CI slacks `min` of the two cone rows; ≥ 0 when feasible.
    pub fn ci_slack(&self, w2: &RVector) -> Vec<f64> {
        let k = self.k();
        let offs = self.ci_offsets();
        (0..k)
            .map(|i| {
                let upper = self.a.column(i).dot(w2) - offs[i];
                let lower = self.a.column(k + i).dot(w2) - offs[i];
                upper.min(lower)
            })
            .collect()
    }

    /// `‖βₘᵀw₂‖²` per antenna, mW.
    pub fn interference(&self, w2: &RVector) -> Vec<f64> {
        self.beta.iter().map(|b| (b.transpose() * w2).norm_squared()).collect()
    }

    /// Sum of interference matrices `Σ βₘβₘᵀ`.
    pub fn interference_gram(&self) -> RMatrix {
        let mut q = RMatrix::zeros(2 * self.n, 2 * self.n);
        for b in &self.beta {
            q += b * b.transpose();
        }
        q
    }

    /// Real `w₂` → precoding solution for this slot.
    pub fn solution_from_w2(&self, w2: &RVector) -> BeamformingSolution {
        let w = complex_from_w2(w2);
        let k = self.k();
        let precoders = (0..k).map(|i| &w * (cis(self.phases[0] - self.phases[i]) / k as f64)).collect();
        BeamformingSolution {
            power: w.norm_squared(),
            ci_margins: self.ci_slack(w2),
            inr: self.interference(w2).iter().map(|p| p / self.sigma_r2).collect(),
            w,
            precoders,
        }
    }

    /// P5 as a generic QCQP in `w₂` (objective ‖w₂‖²).
    pub fn power_min_qcqp(&self) -> QcqpSpec {
        let dim = 2 * self.n;
        let mut spec = QcqpSpec::new(RMatrix::identity(dim, dim), RVector::zeros(dim));
        self.push_ci_constraints(&mut spec);
        for (b, cap) in self.beta.iter().zip(&self.inr_caps) {
            if cap.is_finite() {
                spec.add_quadratic(b * b.transpose(), RVector::zeros(dim), cap * self.sigma_r2);
            }
        }
        spec
    }

    /// CI cone rows as linear constraints `−Aⱼᵀw₂ + √Γ̃ᵢ tanψ ≤ 0`.
    pub fn push_ci_constraints(&self, spec: &mut QcqpSpec) {
        let k = self.k();
        let offs = self.ci_offsets();
        for j in 0..2 * k {
            spec.add_linear(-self.a.column(j).into_owned(), -offs[j % k]);
        }
    }
}

/// A symbol-level precoding solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformingSolution {
    /// Virtual multicast vector `w = Σ tₖ e^{j(φₖ−φ₁)}`.
    #[serde(with = "crate::json::cvector")]
    pub w: CVector,
    /// `tₖ = w e^{j(φ₁−φₖ)}/K`
    #[serde(with = "vec_cvector")]
    pub precoders: Vec<CVector>,
    /// Instantaneous transmit power ‖w‖², mW.
    pub power: f64,
    /// CI constraint slack per user (≥ 0 when satisfied), mW^½.
    pub ci_margins: Vec<f64>,
    /// Linear INR per radar antenna.
    pub inr: Vec<f64>,
}

mod vec_cvector {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "crate::json::cvector")] CVector);

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<Wrapped> = v.iter().map(|m| Wrapped(m.clone())).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CVector>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

impl BeamformingSolution {
    pub fn w2(&self) -> RVector {
        w2_from_complex(&self.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot_t;
    use crate::scene::{gen_channels, psk_frame, rng_from_seed};
    use rand_distr::{Distribution, StandardNormal};

    /// `Re(h̃ᵀw)`, `Im(h̃ᵀw)` straight from complex arithmetic.
    fn complex_ci_terms(h_tilde: &CVector, w: &CVector) -> (f64, f64) {
        let z = crate::linalg::dot_t(h_tilde, w);
        (z.re, z.im)
    }

    fn random_w(n: usize, rng: &mut crate::scene::Rng) -> CVector {
        CVector::from_fn(n, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
    }

    #[test]
    fn equal_phases_leave_channels_unrotated() {
        let cs = gen_channels(4, 3, 2, 1).unwrap();
        let slot = SymbolSlot::new(vec![0.0; 3], 4).unwrap();
        let rot = rotate_channels(&cs, &slot, &LinkBudget::uniform(3, 2, 10.0, 0.0)).unwrap();
        for i in 0..3 {
            assert_eq!(rot.h[i], cs.h_col(i));
        }
    }

    #[test]
    fn common_phase_does_not_change_magnitudes() {
        let cs = gen_channels(4, 3, 2, 2).unwrap();
        let budget = LinkBudget::uniform(3, 2, 10.0, 0.0);
        let w = random_w(4, &mut rng_from_seed(3));
        let base = rotate_channels(&cs, &SymbolSlot::new(vec![0.3, 1.1, -0.7], 4).unwrap(), &budget).unwrap();
        let shifted = rotate_channels(&cs, &SymbolSlot::new(vec![1.3, 2.1, 0.3], 4).unwrap(), &budget).unwrap();
        for i in 0..3 {
            assert!((dot_t(&base.h[i], &w).norm() - dot_t(&shifted.h[i], &w).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_target_arithmetic() {
        // Γ = 20 dB, σ_C² = 1, P_R = 1, ‖f‖² = 2  →  300
        let h = crate::linalg::CMatrix::from_element(2, 1, Complex64::new(1.0, 0.0));
        let g = crate::linalg::CMatrix::from_element(2, 1, Complex64::new(1.0, 0.0));
        let f = crate::linalg::CMatrix::from_element(1, 1, Complex64::new(1.0, 1.0));
        let cs = ChannelSet::new(h, g, f).unwrap();
        let rot = rotate_channels(&cs, &SymbolSlot::new(vec![0.0], 4).unwrap(), &LinkBudget::uniform(1, 1, 20.0, 0.0)).unwrap();
        assert!((rot.gamma_tilde[0] - 300.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_matrix_squares_to_minus_identity() {
        let pi = rotation_matrix(5);
        assert!((&pi * &pi + RMatrix::identity(10, 10)).amax() < 1e-15);
        assert!((&pi * pi.transpose() - RMatrix::identity(10, 10)).amax() < 1e-15);
    }

    #[test]
    fn real_representation_identities() {
        let mut rng = rng_from_seed(17);
        for s in 0..100 {
            let cs = gen_channels(5, 3, 2, s).unwrap();
            let frame = psk_frame(3, 1, 8, s).unwrap();
            let rot = rotate_channels(&cs, &frame.slot(0), &LinkBudget::uniform(3, 2, 10.0, 0.0)).unwrap();
            let p = realify_problem(&rot);
            let w = random_w(5, &mut rng);
            let w2 = w2_from_complex(&w);
            let pi = rotation_matrix(5);
            for i in 0..3 {
                let (re, im) = complex_ci_terms(&rot.h[i], &w);
                assert!((re - p.h_bar[i].dot(&w2)).abs() < 1e-12);
                assert!((im - p.b[i].dot(&w2)).abs() < 1e-12);
                assert!((im - p.h_bar[i].dot(&(&pi * &w2))).abs() < 1e-12);
            }
            for m in 0..2 {
                let lhs = dot_t(&rot.g[m], &w).norm_sqr();
                assert!((lhs - p.interference(&w2)[m]).abs() < 1e-12 * (1.0 + lhs));
            }
        }
    }

    #[test]
    fn real_w_embeds_as_expected() {
        let w = CVector::from_vec(vec![Complex64::new(1.5, 0.0), Complex64::new(-2.0, 0.0)]);
        let w2 = w2_from_complex(&w);
        assert_eq!(w2.as_slice(), &[1.5, -2.0, 0.0, 0.0]);
        let w1 = rotation_matrix(2) * &w2;
        assert_eq!(w1.as_slice(), &[0.0, 0.0, 1.5, -2.0]);
        assert_eq!(complex_from_w2(&w2), w);
    }

    #[test]
    fn precoders_reassemble_w() {
        let cs = gen_channels(4, 3, 2, 5).unwrap();
        let frame = psk_frame(3, 1, 4, 5).unwrap();
        let p = CiProblem::build(&cs, &frame.slot(0), &LinkBudget::uniform(3, 2, 10.0, 0.0)).unwrap();
        let w = random_w(4, &mut rng_from_seed(8));
        let sol = p.solution_from_w2(&w2_from_complex(&w));
        let mut sum = CVector::zeros(4);
        for (k, t) in sol.precoders.iter().enumerate() {
            sum += t * cis(p.phases[k] - p.phases[0]);
        }
        assert!((sum - &w).norm() < 1e-12);
        let total: f64 = sol.precoders.iter().map(|t| t.norm_squared()).sum();
        assert!((total - w.norm_squared() / 3.0).abs() < 1e-12);
    }
}
