use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covariance::{matched_filter, InterferenceCovariance};
use super::detect::{effective_noncentrality, marcum_q1, wilson_interval, Detector};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector};
use crate::scene::{derive_seed, rng_from_seed, RadarScene, Rng, SymbolSlot};

/// Communication interference as seen by the radar array, slot by slot.
pub trait InterferenceSource: Sync {
    fn m(&self) -> usize;
    /// Interference for `len` consecutive slots, M×len.
    fn sample(&self, len: usize, rng: &mut Rng) -> CMatrix;
    /// Per-slot covariance `E[uuᴴ]`.
    fn covariance(&self) -> CMatrix;
}

fn psk_index(order: usize, rng: &mut Rng) -> usize {
    rng.random_range(0..order)
}

fn complex_normal(rng: &mut Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Radar sees only its own noise.
#[derive(Debug, Clone)]
pub struct NoInterference {
    pub m: usize,
}

impl InterferenceSource for NoInterference {
    fn m(&self) -> usize {
        self.m
    }

    fn sample(&self, len: usize, _: &mut Rng) -> CMatrix {
        CMatrix::zeros(self.m, len)
    }

    fn covariance(&self) -> CMatrix {
        CMatrix::zeros(self.m, self.m)
    }
}

/// Block-level precoders `tₖ` carrying i.i.d. PSK symbols: `u_l = Gᵀ Σ tₖ dₖ[l]`.
#[derive(Debug, Clone)]
pub struct FixedPrecoders {
    /// `Gᵀtₖ` per user.
    columns: Vec<CVector>,
    m: usize,
    order: usize,
}

impl FixedPrecoders {
    pub fn new(g: &CMatrix, t: &[CVector], order: usize) -> Self {
        Self { columns: t.iter().map(|tk| g.transpose() * tk).collect(), m: g.ncols(), order }
    }
}

impl InterferenceSource for FixedPrecoders {
    fn m(&self) -> usize {
        self.m
    }

    fn sample(&self, len: usize, rng: &mut Rng) -> CMatrix {
        let mut u = CMatrix::zeros(self.m, len);
        for l in 0..len {
            for c in &self.columns {
                let d = cis(2.0 * PI * psk_index(self.order, rng) as f64 / self.order as f64);
                u.column_mut(l).axpy(d, c, Complex64::new(1.0, 0.0));
            }
        }
        u
    }

    fn covariance(&self) -> CMatrix {
        let mut j = CMatrix::zeros(self.m, self.m);
        for c in &self.columns {
            j += c * c.adjoint();
        }
        j
    }
}

/// Circular Gaussian interference with a given covariance.
#[derive(Debug, Clone)]
pub struct GaussianInterference {
    j: CMatrix,
    factor: CMatrix,
}

impl GaussianInterference {
    pub fn new(j: CMatrix) -> Result<Self> {
        let m = j.nrows();
        let ridge = 1e-14 * (1.0 + j.trace().re.abs());
        let shifted = &j + CMatrix::identity(m, m) * Complex64::new(ridge, 0.0);
        let factor = nalgebra::Cholesky::new(shifted)
            .ok_or_else(|| Error::Numerical("interference covariance is not positive semidefinite".into()))?
            .l();
        Ok(Self { j, factor })
    }
}

impl InterferenceSource for GaussianInterference {
    fn m(&self) -> usize {
        self.j.nrows()
    }

    fn sample(&self, len: usize, rng: &mut Rng) -> CMatrix {
        let z = CMatrix::from_fn(self.j.nrows(), len, |_, _| complex_normal(rng, 1.0));
        &self.factor * z
    }

    fn covariance(&self) -> CMatrix {
        self.j.clone()
    }
}

/// Symbol-level precoding: one precomputed `Gᵀw` per symbol tuple, rotated by `e^{jφ₁}`.
#[derive(Debug, Clone)]
pub struct SymbolLevelTable {
    /// `Gᵀw[q]`, indexed by `q = Σₖ qₖ·orderᵏ`.
    table: Vec<CVector>,
    m: usize,
    users: usize,
    order: usize,
    offset: f64,
    /// Transmit power `‖w[q]‖²` per tuple.
    pub powers: Vec<f64>,
}

impl SymbolLevelTable {
    /// Largest tuple count `build` will enumerate.
    pub const MAX_TUPLES: usize = 1 << 16;

    /// Solve every symbol tuple of a `users`-user, `order`-PSK system with `solve`,
    /// which returns the virtual multicast vector `w` for a slot.
    pub fn build<F>(g: &CMatrix, users: usize, order: usize, offset: f64, solve: F) -> Result<Self>
    where
        F: Fn(&SymbolSlot) -> Result<CVector> + Sync,
    {
        let count = order
            .checked_pow(users as u32)
            .filter(|&c| c <= Self::MAX_TUPLES)
            .ok_or_else(|| Error::InvalidArgument(format!("{order}-PSK with {users} users has too many symbol tuples")))?;
        let ws: Vec<CVector> = (0..count)
            .into_par_iter()
            .map(|q| solve(&Self::slot_of(q, users, order, offset)))
            .collect::<Result<_>>()?;
        Ok(Self {
            powers: ws.iter().map(|w| w.norm_squared()).collect(),
            table: ws.iter().map(|w| g.transpose() * w).collect(),
            m: g.ncols(),
            users,
            order,
            offset,
        })
    }

    pub fn slot_of(q: usize, users: usize, order: usize, offset: f64) -> SymbolSlot {
        let mut rest = q;
        let phases = (0..users)
            .map(|_| {
                let d = rest % order;
                rest /= order;
                2.0 * PI * d as f64 / order as f64 + offset
            })
            .collect();
        SymbolSlot { phases, order }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Mean transmit power over equiprobable tuples, mW.
    pub fn mean_power(&self) -> f64 {
        self.powers.iter().sum::<f64>() / self.powers.len() as f64
    }
}

impl InterferenceSource for SymbolLevelTable {
    fn m(&self) -> usize {
        self.m
    }

    fn sample(&self, len: usize, rng: &mut Rng) -> CMatrix {
        let mut u = CMatrix::zeros(self.m, len);
        for l in 0..len {
            let q = rng.random_range(0..self.table.len());
            let phi1 = 2.0 * PI * (q % self.order) as f64 / self.order as f64 + self.offset;
            u.set_column(l, &(&self.table[q] * cis(phi1)));
        }
        u
    }

    fn covariance(&self) -> CMatrix {
        let mut j = CMatrix::zeros(self.m, self.m);
        for u in &self.table {
            j += u * u.adjoint();
        }
        j.unscale(self.table.len() as f64)
    }
}

/// How the detector handles the unknown angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AngleSearch {
    /// Evaluate the statistic at the true angle.
    Known,
    /// Maximise over a uniform grid on (−π/2, π/2), then refine by parabolic interpolation.
    Grid { points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: u64,
    /// Threshold on the normalised statistic `2T`.
    pub eta: f64,
    pub search: AngleSearch,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub detections: u64,
    pub trials: u64,
    pub rate: f64,
    /// 95 % Wilson interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

struct GridDetector {
    angles: Vec<f64>,
    detectors: Vec<Detector>,
}

/// Analytic `ρ` (raw-statistic convention) and `P_D` for threshold `eta` on `2T`.
pub fn analytic_detection(scene: &RadarScene, cov: &InterferenceCovariance, eta: f64) -> Result<(f64, f64)> {
    let ji = cov.j_tilde_inverse()?;
    let det = Detector::with_inverse(&scene.steering_outer(), &ji);
    let rho = scene.snr() * cov.sigma_r2 * det.energy();
    let pd = marcum_q1(effective_noncentrality(rho).sqrt(), eta.sqrt())?;
    Ok((rho, pd))
}

/// Simulate the matched-filter GLRT detector against interference from `source`.
///
/// The detector whitens with `J̃ = covariance + σ_R²I`, i.e. it treats the
/// interference as Gaussian whatever its real distribution.
pub fn monte_carlo_detection(scene: &RadarScene, source: &dyn InterferenceSource, cfg: &MonteCarloConfig) -> Result<MonteCarloResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if source.m() != scene.m() {
        return Err(Error::Dimension(format!("interference has {} antennas, scene {}", source.m(), scene.m())));
    }
    let cov = InterferenceCovariance::new(source.covariance(), scene.sigma_r2)?;
    let ji = cov.j_tilde_inverse()?;
    let target = scene.steering_outer() * &scene.waveform * (scene.alpha * scene.p_r.sqrt());
    let known = Detector::with_inverse(&scene.steering_outer(), &ji);
    let grid = match cfg.search {
        AngleSearch::Known => None,
        AngleSearch::Grid { points } if points >= 3 => {
            let angles: Vec<f64> = (1..=points).map(|i| -PI / 2.0 + PI * i as f64 / (points + 1) as f64).collect();
            let detectors = angles.iter().map(|&t| Detector::with_inverse(&scene.geometry.outer(t), &ji)).collect();
            Some(GridDetector { angles, detectors })
        }
        AngleSearch::Grid { points } => return Err(Error::InvalidArgument(format!("angle grid needs ≥ 3 points, got {points}"))),
    };
    let (m, l) = (scene.m(), scene.frame_len());
    let detections: u64 = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, trial));
            let noise = CMatrix::from_fn(m, l, |_, _| complex_normal(&mut rng, scene.sigma_r2));
            let y = &target + source.sample(l, &mut rng) + noise;
            let yt = matched_filter(&y, &scene.waveform).expect("waveform dimensions checked at scene construction");
            let stat = match &grid {
                None => known.statistic(&yt),
                Some(g) => grid_statistic(scene, &ji, g, &yt),
            };
            u64::from(2.0 * stat > cfg.eta)
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(detections, cfg.trials, 1.959963984540054);
    Ok(MonteCarloResult { detections, trials: cfg.trials, rate: detections as f64 / cfg.trials as f64, ci_low, ci_high })
}

fn grid_statistic(scene: &RadarScene, ji: &CMatrix, g: &GridDetector, yt: &CMatrix) -> f64 {
    let values: Vec<f64> = g.detectors.iter().map(|d| d.statistic(yt)).collect();
    let (best, &peak) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("grid is nonempty");
    if best == 0 || best + 1 == values.len() {
        return peak;
    }
    let (ym, y0, yp) = (values[best - 1], peak, values[best + 1]);
    let curvature = ym - 2.0 * y0 + yp;
    if curvature >= 0.0 {
        return peak;
    }
    let step = g.angles[1] - g.angles[0];
    let theta = g.angles[best] + 0.5 * step * (ym - yp) / curvature;
    Detector::with_inverse(&scene.geometry.outer(theta), ji).statistic(yt).max(peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::detect::detection_threshold;
    use crate::scene::{gen_channels, radar_waveform, sample_ball, ArrayGeometry, WaveformMode};

    fn scene(snr: f64) -> RadarScene {
        let s = radar_waveform(4, 20, WaveformMode::Orthonormal, 1).unwrap();
        RadarScene::new(ArrayGeometry::ula(4), 0.35, Complex64::new(1.0, 0.0), 1.0, s, 1.0, 1.0).unwrap().with_snr(snr)
    }

    #[test]
    fn false_alarms_match_the_design_rate() {
        let p_fa = 0.05;
        let cfg = MonteCarloConfig { trials: 20_000, eta: detection_threshold(p_fa).unwrap(), search: AngleSearch::Known, seed: 1 };
        let r = monte_carlo_detection(&scene(0.0), &NoInterference { m: 4 }, &cfg).unwrap();
        assert!(r.ci_low <= p_fa + 0.005 && r.ci_high >= p_fa - 0.005, "{r:?}");
    }

    #[test]
    fn strong_target_is_always_found() {
        let cfg = MonteCarloConfig { trials: 500, eta: detection_threshold(1e-4).unwrap(), search: AngleSearch::Grid { points: 181 }, seed: 2 };
        let r = monte_carlo_detection(&scene(1e3), &NoInterference { m: 4 }, &cfg).unwrap();
        assert_eq!(r.detections, 500);
    }

    #[test]
    fn gaussian_interference_matches_analytic_pd() {
        let cs = gen_channels(6, 2, 4, 3).unwrap();
        let mut rng = rng_from_seed(4);
        let t: Vec<CVector> = (0..2).map(|_| sample_ball(6, 1.0, &mut rng)).collect();
        let j = FixedPrecoders::new(&cs.g, &t, 4).covariance();
        let src = GaussianInterference::new(j).unwrap();
        let sc = scene(crate::units::db_to_linear(-3.0));
        let eta = detection_threshold(1e-2).unwrap();
        let cov = InterferenceCovariance::new(src.covariance(), 1.0).unwrap();
        let (_, pd) = analytic_detection(&sc, &cov, eta).unwrap();
        let r = monte_carlo_detection(&sc, &src, &MonteCarloConfig { trials: 20_000, eta, search: AngleSearch::Known, seed: 5 }).unwrap();
        assert!((r.rate - pd).abs() < 0.015, "{} vs {pd}", r.rate);
    }

    #[test]
    fn symbol_table_enumerates_every_tuple() {
        let cs = gen_channels(4, 2, 3, 6).unwrap();
        let table = SymbolLevelTable::build(&cs.g, 2, 4, PI / 4.0, |slot| Ok(CVector::from_element(4, cis(slot.phases[1])))).unwrap();
        assert_eq!(table.len(), 16);
        let slot = SymbolLevelTable::slot_of(7, 2, 4, 0.0);
        assert!((slot.phases[0] - 3.0 * PI / 2.0).abs() < 1e-12 && (slot.phases[1] - PI / 2.0).abs() < 1e-12);
        assert!(SymbolLevelTable::build(&cs.g, 20, 4, 0.0, |_| Ok(CVector::zeros(4))).is_err());
    }

    #[test]
    fn sources_match_their_covariance() {
        let cs = gen_channels(5, 3, 3, 7).unwrap();
        let mut rng = rng_from_seed(8);
        let t: Vec<CVector> = (0..3).map(|_| sample_ball(5, 1.0, &mut rng)).collect();
        let src = FixedPrecoders::new(&cs.g, &t, 4);
        let n = 40_000;
        let u = src.sample(n, &mut rng);
        let emp = (&u * u.adjoint()).unscale(n as f64);
        let j = src.covariance();
        assert!((emp - &j).norm() < 0.05 * j.norm());
    }
}
