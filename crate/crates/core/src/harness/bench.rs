use std::time::Instant;

use super::{at_point, channel_seed, label, num, symbol_seed, Builder, ExperimentConfig, TimingStats};
use crate::ci::{solve_engine, solve_gp, CiProblem};
use crate::error::Result;
use crate::scene::{gen_channels, psk_frame};

pub(crate) const HEADER: &[&str] = &[
    "k",
    "gamma_db",
    "inr_db",
    "instances",
    "gp_mean_ms",
    "gp_p50_ms",
    "gp_p90_ms",
    "engine_mean_ms",
    "engine_p50_ms",
    "engine_p90_ms",
    "speedup",
    "max_abs_diff_mw",
    "status",
];

/// Time the dual projected-gradient solver against the generic engine on the
/// same instances. Runs sequentially so timings are not skewed by contention.
pub(crate) fn run(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    let mut timings = serde_json::Map::new();
    for &k in cfg.sweep.users.values() {
        let k = k as usize;
        for &gamma_db in cfg.sweep.gamma_db.values() {
            for &inr_db in cfg.sweep.inr_db.values() {
                let started = Instant::now();
                let point = label(&[("k", k as f64), ("gamma_db", gamma_db), ("inr_db", inr_db)]);
                let mut budget = cfg.budget(gamma_db, inr_db);
                budget.gamma_db = vec![gamma_db; k];
                let (mut gp_ms, mut engine_ms) = (Vec::new(), Vec::new());
                let mut worst: f64 = 0.0;
                let mut infeasible = 0usize;
                let instances = cfg.trials.channel_draws;
                let res: Result<()> = (|| {
                    for draw in 0..instances {
                        let cs = gen_channels(cfg.dims.n, k, cfg.dims.m, channel_seed(cfg.seed, draw))?;
                        let slot = psk_frame(k, 1, cfg.modulation, symbol_seed(cfg.seed, draw, 0))?.slot(0);
                        let p = CiProblem::build(&cs, &slot, &budget)?;
                        let t = Instant::now();
                        let gp = solve_gp(&p, &cfg.solver.gp);
                        gp_ms.push(t.elapsed().as_secs_f64() * 1e3);
                        let t = Instant::now();
                        let engine = solve_engine(&p, &cfg.solver.engine);
                        engine_ms.push(t.elapsed().as_secs_f64() * 1e3);
                        match (gp, engine) {
                            (Ok(g), Ok((e, _))) => worst = worst.max((g.solution.power - e.power).abs()),
                            (Err(e), _) | (_, Err(e)) if e.is_infeasible() => infeasible += 1,
                            (Err(e), _) | (_, Err(e)) => return Err(e),
                        }
                    }
                    Ok(())
                })();
                res.map_err(at_point(&point))?;
                let gp = TimingStats::from_samples(&gp_ms);
                let engine = TimingStats::from_samples(&engine_ms);
                let st = if infeasible == 0 { "ok" } else { "infeasible" };
                b.row(
                    point.clone(),
                    vec![
                        k.to_string(),
                        num(gamma_db),
                        num(inr_db),
                        instances.to_string(),
                        num(gp.mean_ms),
                        num(gp.p50_ms),
                        num(gp.p90_ms),
                        num(engine.mean_ms),
                        num(engine.p50_ms),
                        num(engine.p90_ms),
                        num(engine.mean_ms / gp.mean_ms),
                        num(worst),
                        st.into(),
                    ],
                    st,
                    started,
                );
                timings.insert(point, serde_json::json!({ "gp": gp, "engine": engine }));
            }
        }
    }
    b.extra("timings", serde_json::Value::Object(timings));
    Ok(())
}
