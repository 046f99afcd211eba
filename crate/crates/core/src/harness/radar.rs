use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::comms::status;
use super::{at_point, channel_seed, label, mean_se, num, trial_seed, Builder, ExperimentConfig, Mode, Search, SolveLog};
use crate::ci::{solve_interf_min, CiProblem};
use crate::error::{Error, Result};
use crate::radar::{
    analytic_detection, crb, monte_carlo_detection, wilson_interval, AngleSearch, InterferenceCovariance, InterferenceSource,
    MonteCarloConfig, SymbolLevelTable,
};
use crate::scene::{gen_channels, psk_frame, radar_waveform, ArrayGeometry, RadarScene};
use crate::units::{db_to_linear, dbm_to_mw};

pub(crate) const DETECT_HEADER: &[&str] = &[
    "snr_db",
    "gamma_db",
    "power_dbm",
    "rho",
    "eta",
    "pd_analytic",
    "pd_empirical",
    "ci_low",
    "ci_high",
    "crb",
    "rmse",
    "draws",
    "feasible_draws",
    "status",
];

pub(crate) const CRB_HEADER: &[&str] =
    &["snr_db", "gamma_db", "power_dbm", "crb", "se_crb", "rmse", "pd_analytic", "draws", "feasible_draws", "status"];

#[derive(Clone, Copy)]
struct SnrResult {
    rho: f64,
    pd: f64,
    detections: u64,
    trials: u64,
    crb: f64,
}

pub(crate) fn scene(cfg: &ExperimentConfig) -> Result<RadarScene> {
    let waveform = radar_waveform(cfg.dims.m, cfg.dims.radar_len, cfg.radar.waveform, cfg.seed)?;
    let b = cfg.budget(0.0, 0.0);
    RadarScene::new(ArrayGeometry::ula(cfg.dims.m), cfg.radar.theta, Complex64::new(1.0, 0.0), b.p_r, waveform, b.sigma_c2, b.sigma_r2)
}

/// Symbol-level interference table for one channel draw, or `None` when
/// some symbol combination is infeasible under the budget.
fn ci_table(cfg: &ExperimentConfig, draw: usize, gamma_db: f64, cap: f64, log: &mut SolveLog) -> Result<Option<SymbolLevelTable>> {
    let d = &cfg.dims;
    let cs = gen_channels(d.n, d.k, d.m, channel_seed(cfg.seed, draw))?;
    let budget = cfg.budget(gamma_db, f64::INFINITY);
    let offset = psk_frame(1, 1, cfg.modulation, 0)?.offset;
    let t = Instant::now();
    let table = SymbolLevelTable::build(&cs.g, d.k, cfg.modulation, offset, |slot| {
        let p = CiProblem::build(&cs, slot, &budget)?;
        Ok(solve_interf_min(&p, cap, &cfg.solver.engine)?.solution.w)
    });
    log.times_ms.push(t.elapsed().as_secs_f64() * 1e3);
    match table {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.is_infeasible() => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn run(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    let detect = cfg.mode == Mode::RadarDetect;
    let base = scene(cfg)?;
    let eta = cfg.radar.eta()?;
    let search = match cfg.radar.search {
        Search::Known => AngleSearch::Known,
        Search::Grid => AngleSearch::Grid { points: cfg.radar.grid_points },
    };
    let snrs = cfg.sweep.snr_db.values();
    let mut group = 0usize;
    for &gamma_db in cfg.sweep.gamma_db.values() {
        for &power_dbm in cfg.sweep.power_dbm.values() {
            let started = Instant::now();
            let point = label(&[("gamma_db", gamma_db), ("power_dbm", power_dbm)]);
            let cap = dbm_to_mw(power_dbm);
            let draws: Vec<(Option<Vec<SnrResult>>, SolveLog)> = (0..cfg.trials.channel_draws)
                .into_par_iter()
                .map(|draw| {
                    let mut log = SolveLog::default();
                    let Some(table) = ci_table(cfg, draw, gamma_db, cap, &mut log)? else {
                        return Ok((None, log));
                    };
                    let cov = InterferenceCovariance::new(table.covariance(), base.sigma_r2)?;
                    let per_snr = snrs
                        .iter()
                        .enumerate()
                        .map(|(i, &snr_db)| {
                            let snr = db_to_linear(snr_db);
                            let sc = base.with_snr(snr);
                            let (rho, pd) = analytic_detection(&sc, &cov, eta)?;
                            let bound = match crb(&sc, &cov, snr) {
                                Ok(r) => r.crb,
                                Err(Error::DegenerateGeometry(_)) => f64::NAN,
                                Err(e) => return Err(e),
                            };
                            let (detections, trials) = if detect && cfg.trials.detection > 0 {
                                let mc = MonteCarloConfig {
                                    trials: cfg.trials.detection,
                                    eta,
                                    search,
                                    seed: trial_seed(cfg.seed, group * snrs.len() + i, draw),
                                };
                                let r = monte_carlo_detection(&sc, &table as &dyn InterferenceSource, &mc)?;
                                (r.detections, r.trials)
                            } else {
                                (0, 0)
                            };
                            Ok(SnrResult { rho, pd, detections, trials, crb: bound })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((Some(per_snr), log))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(at_point(&point))?;
            let total = draws.len();
            let mut feasible_draws = Vec::new();
            for (r, log) in draws {
                b.log(log);
                feasible_draws.extend(r);
            }
            let feasible = feasible_draws.len();
            let st = status(feasible, total);
            for (i, &snr_db) in snrs.iter().enumerate() {
                let col = |f: fn(&SnrResult) -> f64| feasible_draws.iter().map(|d| f(&d[i])).collect::<Vec<_>>();
                let (rho, _) = mean_se(&col(|r| r.rho));
                let (pd, _) = mean_se(&col(|r| r.pd));
                let (bound, se_bound) = mean_se(&col(|r| r.crb));
                let detections: u64 = feasible_draws.iter().map(|d| d[i].detections).sum();
                let trials: u64 = feasible_draws.iter().map(|d| d[i].trials).sum();
                let common = [num(snr_db), num(gamma_db), num(power_dbm)];
                let tail = [total.to_string(), feasible.to_string(), st.to_string()];
                let row: Vec<String> = if detect {
                    let (empirical, lo, hi) = if trials > 0 {
                        let (lo, hi) = wilson_interval(detections, trials, 1.96);
                        (num(detections as f64 / trials as f64), num(lo), num(hi))
                    } else {
                        Default::default()
                    };
                    common
                        .into_iter()
                        .chain([num(rho), num(eta), num(pd), empirical, lo, hi, num(bound), num(bound.sqrt())])
                        .chain(tail)
                        .collect()
                } else {
                    common.into_iter().chain([num(bound), num(se_bound), num(bound.sqrt()), num(pd)]).chain(tail).collect()
                };
                let p = format!("{point},snr_db={}", num(snr_db));
                b.row(p, row, st, started);
            }
            group += 1;
        }
    }
    Ok(())
}
