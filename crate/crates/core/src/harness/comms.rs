use std::time::Instant;

use rayon::prelude::*;

use super::{at_point, channel_seed, label, mean_se, num, symbol_seed, Builder, ExperimentConfig, SolveLog};
use crate::ci::{solve_interf_min, solve_power_min_checked, CiProblem, LinkBudget};
use crate::error::Result;
use crate::robust::{realisation_violation, solve_robust, RobustCiProblem};
use crate::scene::{derive_seed, gen_channels, perturb_channels, psk_frame, ChannelSet, SymbolSlot};
use crate::units::{dbm_to_mw, linear_to_db, mw_to_dbm};

pub(crate) const POWER_MIN_HEADER: &[&str] = &[
    "gamma_db",
    "inr_db",
    "draws",
    "feasible_draws",
    "mean_power_mw",
    "se_power_mw",
    "mean_power_dbm",
    "mean_max_inr_db",
    "mean_iterations",
    "status",
];

pub(crate) const INTERF_MIN_HEADER: &[&str] = &[
    "gamma_db",
    "power_dbm",
    "draws",
    "feasible_draws",
    "mean_interference_mw",
    "se_interference_mw",
    "mean_power_mw",
    "status",
];

pub(crate) const ROBUST_HEADER: &[&str] = &[
    "gamma_db",
    "inr_db",
    "delta",
    "draws",
    "feasible_draws",
    "mean_power_mw",
    "se_power_mw",
    "mean_nominal_power_mw",
    "samples",
    "violations",
    "status",
];

/// Largest sampled constraint value still counted as satisfied.
const VIOLATION_TOL: f64 = 1e-6;

/// Per-draw result: `values` averaged over every slot of every frame, or
/// `None` when some slot was infeasible.
struct Draw {
    values: Option<Vec<f64>>,
    log: SolveLog,
}

pub(crate) fn status(feasible: usize, draws: usize) -> &'static str {
    if feasible == draws {
        "ok"
    } else if feasible == 0 {
        "infeasible"
    } else {
        "partial"
    }
}

/// Run `slot_fn(draw, slot index, channels, slot, log)` on every slot of
/// every frame of every draw, in parallel over draws, and average its outputs
/// per draw.
fn sweep_draws<F>(cfg: &ExperimentConfig, slot_fn: F) -> Result<Vec<Draw>>
where
    F: Fn(usize, usize, &ChannelSet, &SymbolSlot, &mut SolveLog) -> Result<Option<Vec<f64>>> + Sync,
{
    let d = &cfg.dims;
    (0..cfg.trials.channel_draws)
        .into_par_iter()
        .map(|draw| {
            let cs = gen_channels(d.n, d.k, d.m, channel_seed(cfg.seed, draw))?;
            let mut log = SolveLog::default();
            let mut sum: Option<Vec<f64>> = None;
            let mut count = 0usize;
            for frame in 0..cfg.trials.frames {
                let symbols = psk_frame(d.k, d.frame_len, cfg.modulation, symbol_seed(cfg.seed, draw, frame))?;
                for slot in symbols.slots() {
                    match slot_fn(draw, count, &cs, &slot, &mut log)? {
                        None => return Ok(Draw { values: None, log }),
                        Some(v) => {
                            let acc = sum.get_or_insert_with(|| vec![0.0; v.len()]);
                            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
                            count += 1;
                        }
                    }
                }
            }
            let values = sum.map(|s| s.into_iter().map(|x| x / count as f64).collect());
            Ok(Draw { values, log })
        })
        .collect()
}

/// Column `i` of the feasible draws.
fn feasible_column(draws: &[Draw], i: usize) -> Vec<f64> {
    draws.iter().filter_map(|d| d.values.as_ref().map(|v| v[i])).collect()
}

fn absorb(b: &mut Builder, draws: Vec<Draw>) -> (Vec<Draw>, usize) {
    let feasible = draws.iter().filter(|d| d.values.is_some()).count();
    let mut kept = Vec::with_capacity(draws.len());
    for mut d in draws {
        b.log(std::mem::take(&mut d.log));
        kept.push(d);
    }
    (kept, feasible)
}

fn infeasible_to_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(e) if e.is_infeasible() => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn power_min(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    for &gamma_db in cfg.sweep.gamma_db.values() {
        for &inr_db in cfg.sweep.inr_db.values() {
            let started = Instant::now();
            let point = label(&[("gamma_db", gamma_db), ("inr_db", inr_db)]);
            let budget = cfg.budget(gamma_db, inr_db);
            let draws = sweep_draws(cfg, |_, _, cs, slot, log| {
                let p = CiProblem::build(cs, slot, &budget)?;
                let t = Instant::now();
                let Some(out) = infeasible_to_none(solve_power_min_checked(&p, &cfg.solver.gp, &cfg.solver.engine))? else {
                    return Ok(None);
                };
                log.record(t, out.dual.iterations, !out.fallback && out.converged);
                let max_inr = out.solution.inr.iter().copied().fold(0.0, f64::max);
                Ok(Some(vec![out.solution.power, max_inr, out.dual.iterations as f64]))
            })
            .map_err(at_point(&point))?;
            let total = draws.len();
            let (draws, feasible) = absorb(b, draws);
            let (power, se) = mean_se(&feasible_column(&draws, 0));
            let (inr, _) = mean_se(&feasible_column(&draws, 1));
            let (iters, _) = mean_se(&feasible_column(&draws, 2));
            let st = status(feasible, total);
            b.row(
                point,
                vec![
                    num(gamma_db),
                    num(inr_db),
                    total.to_string(),
                    feasible.to_string(),
                    num(power),
                    num(se),
                    num(mw_to_dbm(power)),
                    num(linear_to_db(inr)),
                    num(iters),
                    st.into(),
                ],
                st,
                started,
            );
        }
    }
    Ok(())
}

pub(crate) fn interf_min(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    for &gamma_db in cfg.sweep.gamma_db.values() {
        for &power_dbm in cfg.sweep.power_dbm.values() {
            let started = Instant::now();
            let point = label(&[("gamma_db", gamma_db), ("power_dbm", power_dbm)]);
            let budget = cfg.budget(gamma_db, f64::INFINITY);
            let cap = dbm_to_mw(power_dbm);
            let draws = sweep_draws(cfg, |_, _, cs, slot, log| {
                let p = CiProblem::build(cs, slot, &budget)?;
                let t = Instant::now();
                let Some(out) = infeasible_to_none(solve_interf_min(&p, cap, &cfg.solver.engine))? else {
                    return Ok(None);
                };
                log.times_ms.push(t.elapsed().as_secs_f64() * 1e3);
                Ok(Some(vec![out.objective, out.solution.power]))
            })
            .map_err(at_point(&point))?;
            let total = draws.len();
            let (draws, feasible) = absorb(b, draws);
            let (interf, se) = mean_se(&feasible_column(&draws, 0));
            let (power, _) = mean_se(&feasible_column(&draws, 1));
            let st = status(feasible, total);
            b.row(
                point,
                vec![
                    num(gamma_db),
                    num(power_dbm),
                    total.to_string(),
                    feasible.to_string(),
                    num(interf),
                    num(se),
                    num(power),
                    st.into(),
                ],
                st,
                started,
            );
        }
    }
    Ok(())
}

/// Count realisations inside the error balls that break a nominal constraint.
pub(crate) fn sampled_violations(
    estimate: &ChannelSet,
    slot: &SymbolSlot,
    budget: &LinkBudget,
    problem: &RobustCiProblem,
    w2: &crate::linalg::RVector,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let mut violations = 0;
    for s in 0..samples {
        let truth = perturb_channels(estimate, problem.bounds, derive_seed(seed, s as u64))?;
        if realisation_violation(&truth, slot, budget, w2)? > VIOLATION_TOL {
            violations += 1;
        }
    }
    Ok(violations)
}

pub(crate) fn robust(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    for &gamma_db in cfg.sweep.gamma_db.values() {
        for &inr_db in cfg.sweep.inr_db.values() {
            for &delta in cfg.sweep.delta.values() {
                let started = Instant::now();
                let point = label(&[("gamma_db", gamma_db), ("inr_db", inr_db), ("delta", delta)]);
                let budget = cfg.budget(gamma_db, inr_db);
                let bounds = cfg.robust.bounds(delta);
                let draws = sweep_draws(cfg, |draw, index, cs, slot, log| {
                    let rp = RobustCiProblem::build(cs, slot, &budget, bounds)?;
                    let t = Instant::now();
                    let Some(out) = infeasible_to_none(solve_robust(&rp, &cfg.solver.engine))? else {
                        return Ok(None);
                    };
                    log.record(t, out.engine.newton_iterations, out.engine.status == crate::qcqp::SolveStatus::Optimal);
                    let nominal = CiProblem::build(cs, slot, &budget)?;
                    let nominal_power = match infeasible_to_none(solve_power_min_checked(&nominal, &cfg.solver.gp, &cfg.solver.engine))? {
                        Some(n) => n.solution.power,
                        None => f64::NAN,
                    };
                    let seed = derive_seed(super::trial_seed(cfg.seed, draw, index), delta.to_bits());
                    let violations =
                        sampled_violations(cs, slot, &budget, &rp, &out.solution.w2(), cfg.trials.robust_samples, seed)?;
                    Ok(Some(vec![out.solution.power, nominal_power, violations as f64]))
                })
                .map_err(at_point(&point))?;
                let total = draws.len();
                let (draws, feasible) = absorb(b, draws);
                let (power, se) = mean_se(&feasible_column(&draws, 0));
                let (nominal, _) = mean_se(&feasible_column(&draws, 1));
                let slots = cfg.trials.frames * cfg.dims.frame_len;
                // per-draw values are slot averages
                let violations: f64 = feasible_column(&draws, 2).iter().map(|v| v * slots as f64).sum();
                let samples = feasible * slots * cfg.trials.robust_samples;
                let st = status(feasible, total);
                b.row(
                    point,
                    vec![
                        num(gamma_db),
                        num(inr_db),
                        num(delta),
                        total.to_string(),
                        feasible.to_string(),
                        num(power),
                        num(se),
                        num(nominal),
                        samples.to_string(),
                        format!("{}", violations.round() as u64),
                        st.into(),
                    ],
                    st,
                    started,
                );
            }
        }
    }
    Ok(())
}
