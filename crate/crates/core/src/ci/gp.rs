use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dual::{DualEval, DualObjective, DualState};
use super::problem::{BeamformingSolution, CiProblem};
use crate::error::{Error, Result};
use crate::linalg::RVector;
use crate::scene::rng_from_seed;

/// How the first trial step of each backtracking search is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Always start from `initial_step`.
    Fixed,
    /// Start from the Barzilai–Borwein step of the previous move.
    BarzilaiBorwein,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Relative noise level of `f` below which the derivative test is used.
    pub noise: f64,
    pub step_rule: StepRule,
    /// Dual values above `infeasible_factor · ΣΓ̃` are taken as divergence.
    pub infeasible_factor: f64,
    pub seed: u64,
    /// Record the accepted dual values in [`DualState::trace`].
    pub trace: bool,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 10_000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            max_backtracks: 50,
            noise: 1e-10,
            step_rule: StepRule::BarzilaiBorwein,
            infeasible_factor: 1e9,
            seed: 0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpOutcome {
    pub state: DualState,
    pub solution: BeamformingSolution,
}

impl GpOutcome {
    /// Turn a non-converged run into [`Error::MaxIterations`].
    pub fn converged(self) -> Result<Self> {
        if self.state.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterations { iterations: self.state.iterations, residual: self.state.residual })
        }
    }

    /// `|primal − dual| / primal`
    pub fn relative_gap(&self) -> f64 {
        (self.solution.power - self.state.dual_value).abs() / self.solution.power.max(f64::MIN_POSITIVE)
    }
}

fn project(z: &RVector) -> RVector {
    z.map(|x| x.max(0.0))
}

/// `‖z − max(z − g, 0)‖∞`, with entries from `scaled_from` on weighted by `max(1, zᵢ)`
/// so that `cₘ·|∂f/∂cₘ|` is bounded as well.
fn pg_residual(z: &RVector, g: &RVector, scaled_from: usize) -> f64 {
    z.iter()
        .zip(g.iter())
        .enumerate()
        .map(|(i, (&zi, &gi))| {
            let r = (zi - (zi - gi).max(0.0)).abs();
            if i >= scaled_from { r * zi.max(1.0) } else { r }
        })
        .fold(0.0, f64::max)
}

/// Projected gradient descent on the minimisation-form dual.
fn descend(obj: &DualObjective, p: &CiProblem, opts: &GpOptions) -> Result<(RVector, DualEval, DualState)> {
    let n = obj.dim();
    let mut rng = rng_from_seed(opts.seed);
    let mut z = RVector::from_fn(n, |_, _| rng.random::<f64>() / n as f64);
    let mut cur = obj.eval(&z)?;
    let mut evaluations = 1;
    let blowup = opts.infeasible_factor * p.gamma_tilde.iter().sum::<f64>();
    let mut trace = Vec::new();
    let mut prev: Option<(RVector, RVector)> = None;
    let mut residual = pg_residual(&z, &cur.grad, 2 * p.k());
    let mut iterations = 0;

    while residual >= opts.tol && iterations < opts.max_iter {
        let mut step = match (opts.step_rule, &prev) {
            (StepRule::BarzilaiBorwein, Some((zp, gp))) => {
                let s = &z - zp;
                let y = &cur.grad - gp;
                let sy = s.dot(&y);
                if sy > 0.0 { (s.norm_squared() / sy).clamp(1e-12, 1e12) } else { 1e12 }
            }
            _ => opts.initial_step,
        };
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = project(&(&z - &cur.grad * step));
            let e = obj.eval(&trial)?;
            evaluations += 1;
            let d = &trial - &z;
            let slope = cur.grad.dot(&d);
            let exact = cur.value - e.value >= -opts.armijo * slope;
            // Near the optimum f differences drop below its rounding noise; fall back
            // to the derivative form of the Armijo test, exact for quadratics.
            let approx = e.value <= cur.value + opts.noise * cur.value.abs()
                && e.grad.dot(&d) <= (2.0 * opts.armijo - 1.0) * slope;
            if e.value.is_finite() && slope < 0.0 && (exact || approx) {
                accepted = Some((trial, e));
                break;
            }
            step *= opts.shrink;
        }
        let Some((trial, e)) = accepted else { break };
        prev = Some((std::mem::replace(&mut z, trial), std::mem::replace(&mut cur, e).grad));
        iterations += 1;
        if opts.trace {
            trace.push(-cur.value);
        }
        if -cur.value > blowup {
            return Err(Error::Infeasible(format!("dual objective exceeded {blowup:.3e} after {iterations} iterations")));
        }
        residual = pg_residual(&z, &cur.grad, 2 * p.k());
    }
    let state = DualState {
        lambda: z.rows(0, 2 * p.k()).iter().copied().collect(),
        c: obj.full_c(&z),
        dual_value: -cur.value,
        iterations,
        evaluations,
        residual,
        converged: residual < opts.tol,
        trace,
    };
    Ok((z, cur, state))
}

/// Scale `w₂` up by the smallest factor that clears every CI row.
fn polish(p: &CiProblem, w2: &RVector) -> RVector {
    let offs = p.ci_offsets();
    let k = p.k();
    let mut scale: f64 = 1.0;
    for j in 0..2 * k {
        let lhs = p.a.column(j).dot(w2);
        if lhs > 0.0 && lhs < offs[j % k] {
            scale = scale.max(offs[j % k] / lhs);
        }
    }
    w2 * scale
}

/// Power minimisation with INR caps by projected gradient on the dual.
pub fn solve_gp(p: &CiProblem, opts: &GpOptions) -> Result<GpOutcome> {
    if p.k() == 0 {
        return Err(Error::InvalidArgument("problem has no users".into()));
    }
    let obj = DualObjective::new(p, true);
    let (_, eval, state) = descend(&obj, p, opts)?;
    let w2 = polish(p, &eval.w2);
    Ok(GpOutcome { solution: p.solution_from_w2(&w2), state })
}

/// The problem with INR caps dropped, solved through its own dual.
pub fn solve_p8(p: &CiProblem, opts: &GpOptions) -> Result<GpOutcome> {
    if p.k() == 0 {
        return Err(Error::InvalidArgument("problem has no users".into()));
    }
    let obj = DualObjective::new(p, false);
    let (_, eval, state) = descend(&obj, p, opts)?;
    let w2 = polish(p, &eval.w2);
    Ok(GpOutcome { solution: p.solution_from_w2(&w2), state })
}

/// Solve without INR caps and keep the answer only if every cap is strictly slack.
pub fn fast_path(p: &CiProblem, opts: &GpOptions) -> Result<Option<GpOutcome>> {
    let out = solve_p8(p, opts)?;
    let w2 = out.solution.w2();
    let slack = p
        .interference(&w2)
        .iter()
        .zip(&p.inr_caps)
        .all(|(i, cap)| *i < cap * p.sigma_r2);
    Ok(slack.then_some(out))
}

/// Fast path first, full dual otherwise.
pub fn solve_power_min(p: &CiProblem, opts: &GpOptions) -> Result<GpOutcome> {
    match fast_path(p, opts)? {
        Some(out) => Ok(out),
        None => solve_gp(p, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::problem::LinkBudget;
    use crate::linalg::{CMatrix, CVector};
    use crate::scene::{gen_channels, psk_frame, ChannelSet, SymbolSlot};
    use num_complex::Complex64;

    fn problem(seed: u64, n: usize, k: usize, m: usize, gamma: f64, inr: f64) -> CiProblem {
        let cs = gen_channels(n, k, m, seed).unwrap();
        let frame = psk_frame(k, 1, 4, seed).unwrap();
        CiProblem::build(&cs, &frame.slot(0), &LinkBudget::uniform(k, m, gamma, inr)).unwrap()
    }

    fn single_user() -> CiProblem {
        let h = CMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let g = CMatrix::from_column_slice(2, 1, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let f = CMatrix::zeros(1, 1);
        let cs = ChannelSet::new(h, g, f).unwrap();
        let slot = SymbolSlot::new(vec![0.0], 4).unwrap();
        // Γ̃ = 4 with σ_C² = 1 and F = 0; INR cap huge.
        let budget = LinkBudget::uniform(1, 1, 10.0 * 4f64.log10(), 120.0);
        CiProblem::build(&cs, &slot, &budget).unwrap()
    }

    #[test]
    fn single_user_closed_form() {
        let p = single_user();
        let out = solve_gp(&p, &GpOptions::default()).unwrap().converged().unwrap();
        let expect = CVector::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!((&out.solution.w - expect).norm() < 1e-6, "{}", out.solution.w);
        assert!((out.solution.power - 4.0).abs() < 1e-6);
    }

    #[test]
    fn single_user_grid_search_agrees() {
        let p = single_user();
        let best = brute_force_single_user(&p);
        let out = solve_gp(&p, &GpOptions::default()).unwrap();
        assert!(out.solution.power <= best + 1e-9);
        assert!(best - out.solution.power < 1e-2);
    }

    fn brute_force_single_user(p: &CiProblem) -> f64 {
        // w = (x + jy, 0); only the first entry matters for h̃ = [1, 0].
        let mut best = f64::INFINITY;
        let steps = 801;
        for i in 0..steps {
            for j in 0..steps {
                let x = 4.0 * i as f64 / (steps - 1) as f64;
                let y = -2.0 + 4.0 * j as f64 / (steps - 1) as f64;
                let w2 = RVector::from_vec(vec![x, 0.0, -y, 0.0]);
                if p.ci_slack(&w2).iter().all(|s| *s >= -1e-12) {
                    best = best.min(x * x + y * y);
                }
            }
        }
        best
    }

    #[test]
    fn fixed_and_bb_steps_agree() {
        let p = problem(4, 6, 3, 2, 10.0, 0.0);
        let bb = solve_gp(&p, &GpOptions::default()).unwrap().converged().unwrap();
        let fixed = solve_gp(&p, &GpOptions { step_rule: StepRule::Fixed, max_iter: 200_000, ..Default::default() })
            .unwrap()
            .converged()
            .unwrap();
        assert!((bb.solution.power - fixed.solution.power).abs() < 1e-6 * bb.solution.power);
    }

    #[test]
    fn dual_ascent_is_monotone() {
        let p = problem(5, 8, 4, 4, 20.0, 0.0);
        let out = solve_gp(&p, &GpOptions { trace: true, ..Default::default() }).unwrap();
        let scale = out.state.dual_value.abs();
        assert!(out.state.trace.windows(2).all(|w| w[1] >= w[0] - 1e-10 * scale));
    }

    #[test]
    fn targets_scale_power_linearly() {
        let p = problem(6, 8, 4, 4, 15.0, 0.0);
        let base = solve_gp(&p, &GpOptions::default()).unwrap().converged().unwrap();
        let mut q = p.scale_targets(3.0);
        q.inr_caps.iter_mut().for_each(|r| *r *= 3.0);
        let scaled = solve_gp(&q, &GpOptions::default()).unwrap().converged().unwrap();
        assert!((scaled.solution.power - 3.0 * base.solution.power).abs() < 1e-6 * scaled.solution.power);
        let free = solve_p8(&p, &GpOptions::default()).unwrap();
        let free3 = solve_p8(&p.scale_targets(3.0), &GpOptions::default()).unwrap();
        assert!((free3.solution.power - 3.0 * free.solution.power).abs() < 1e-6 * free3.solution.power);
    }

    #[test]
    fn strong_duality_and_slackness() {
        for s in 0..10 {
            let p = problem(10 + s, 8, 4, 4, 20.0, 0.0);
            let out = solve_gp(&p, &GpOptions::default()).unwrap().converged().unwrap();
            assert!(out.relative_gap() < 1e-6, "gap {}", out.relative_gap());
            let intf = p.interference(&out.solution.w2());
            for m in 0..4 {
                let cs = out.state.c[m] * (intf[m] - p.inr_caps[m] * p.sigma_r2);
                assert!(cs.abs() < 1e-5, "slackness {cs}");
                assert!(out.solution.inr[m] <= p.inr_caps[m] + 1e-6);
            }
            assert!(out.solution.ci_margins.iter().all(|&m| m >= -1e-8));
        }
    }

    #[test]
    fn initialisation_does_not_matter() {
        let p = problem(7, 8, 4, 4, 20.0, 0.0);
        let a = solve_gp(&p, &GpOptions { seed: 1, ..Default::default() }).unwrap();
        let b = solve_gp(&p, &GpOptions { seed: 2, ..Default::default() }).unwrap();
        assert!((a.solution.power - b.solution.power).abs() < 1e-6 * a.solution.power);
    }

    #[test]
    fn fast_path_fires_for_loose_caps() {
        let p = problem(8, 8, 4, 4, 20.0, 60.0);
        let fast = fast_path(&p, &GpOptions::default()).unwrap().expect("fast path should fire");
        let full = solve_gp(&p, &GpOptions::default()).unwrap();
        assert!((fast.solution.power - full.solution.power).abs() < 1e-6 * full.solution.power);
    }

    #[test]
    fn fast_path_declines_for_zero_cap() {
        let p = problem(9, 8, 4, 4, 20.0, 0.0);
        // An INR cap of 0 dB is far below the unconstrained interference at Γ = 20 dB.
        assert!(fast_path(&p, &GpOptions::default()).unwrap().is_none());
    }

    #[test]
    fn caps_raise_power() {
        for s in 0..5 {
            let p = problem(20 + s, 8, 4, 4, 20.0, 0.0);
            let capped = solve_gp(&p, &GpOptions::default()).unwrap();
            let free = solve_p8(&p, &GpOptions::default()).unwrap();
            assert!(capped.solution.power >= free.solution.power * (1.0 - 1e-9));
        }
    }

    #[test]
    fn impossible_caps_are_infeasible() {
        // N = M = 2 with a tiny cap: the radar sees every transmit direction.
        let p = problem(30, 2, 2, 2, 20.0, -60.0);
        let err = solve_gp(&p, &GpOptions::default()).unwrap_err();
        assert!(err.is_infeasible(), "{err:?}");
    }
}
