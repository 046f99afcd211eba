use std::time::Instant;

use rayon::prelude::*;

use super::golden::{compare, load_golden, Instance, InstanceSeeds, ProblemTag};
use super::{at_point, channel_seed, num, opt, symbol_seed, Builder, ExperimentConfig};
use crate::error::{Error, Result};
use crate::scene::{gen_channels, psk_frame};
use crate::units::dbm_to_mw;

pub(crate) const COMPARE_HEADER: &[&str] = &[
    "action",
    "id",
    "problem",
    "file",
    "hash_ok",
    "oracle_status",
    "oracle_objective",
    "primary_objective",
    "abs_diff",
    "rel_diff",
    "ci_objective",
    "sinr_shortfall_db",
    "pass",
    "status",
];

pub(crate) fn run(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    let o = &cfg.oracle;
    if o.golden.is_none() && o.export.is_none() {
        return Err(Error::Config("compare-oracle needs oracle.golden and/or oracle.export".into()));
    }
    if o.export.is_some() {
        export(cfg, b)?;
    }
    if o.golden.is_some() {
        check(cfg, b)?;
    }
    Ok(())
}

/// Instances for `tag` over its sweep axes, one per channel draw per point.
pub fn instances(cfg: &ExperimentConfig, tag: ProblemTag) -> Result<Vec<Instance>> {
    let s = &cfg.sweep;
    let mut points = Vec::new();
    for &gamma_db in s.gamma_db.values() {
        match tag {
            ProblemTag::P0 | ProblemTag::P3 => {
                points.extend(s.inr_db.values().iter().map(|&inr| (gamma_db, inr, None, None)));
            }
            ProblemTag::P1 | ProblemTag::P4 => {
                points.extend(s.power_dbm.values().iter().map(|&p| (gamma_db, f64::INFINITY, Some(dbm_to_mw(p)), None)));
            }
            ProblemTag::P11 | ProblemTag::P13 => {
                for &inr in s.inr_db.values() {
                    points.extend(s.delta.values().iter().map(|&d| (gamma_db, inr, None, Some(cfg.robust.bounds(d)))));
                }
            }
        }
    }
    let d = &cfg.dims;
    let mut out = Vec::new();
    for (pi, (gamma_db, inr_db, power_budget_mw, bounds)) in points.into_iter().enumerate() {
        for draw in 0..cfg.trials.channel_draws {
            let seeds = InstanceSeeds { channels: channel_seed(cfg.seed, draw), symbols: symbol_seed(cfg.seed, draw, 0) };
            out.push(Instance {
                id: format!("{tag}-{pi:03}-{draw:04}"),
                problem: tag,
                seeds,
                channels: gen_channels(d.n, d.k, d.m, seeds.channels)?,
                budget: cfg.budget(gamma_db, inr_db),
                slot: psk_frame(d.k, 1, cfg.modulation, seeds.symbols)?.slot(0),
                power_budget_mw,
                bounds,
            });
        }
    }
    Ok(out)
}

fn export(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    let dir = cfg.oracle.export.as_ref().expect("checked by caller");
    std::fs::create_dir_all(dir)?;
    for &tag in &cfg.oracle.problems {
        let started = Instant::now();
        let all = instances(cfg, tag)?;
        let solved: Vec<Result<Option<f64>>> = all
            .par_iter()
            .map(|inst| match inst.solve_ci(&cfg.solver) {
                Ok((obj, _)) => Ok(Some(obj)),
                Err(e) if e.is_infeasible() => Ok(None),
                Err(e) => Err(at_point(&inst.id)(e)),
            })
            .collect();
        for (inst, primary) in all.iter().zip(solved) {
            let primary = primary?;
            let file = dir.join(format!("{}.json", inst.id));
            inst.write(&file)?;
            let st = if primary.is_some() { "ok" } else { "infeasible" };
            let row = vec![
                "export".into(),
                inst.id.clone(),
                tag.to_string(),
                file.display().to_string(),
                String::new(),
                String::new(),
                String::new(),
                opt(primary),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                st.into(),
            ];
            b.row(inst.id.clone(), row, st, started);
        }
    }
    Ok(())
}

fn check(cfg: &ExperimentConfig, b: &mut Builder) -> Result<()> {
    let path = cfg.oracle.golden.as_ref().expect("checked by caller");
    let records = load_golden(path)?;
    let started = Instant::now();
    let results: Vec<Result<_>> = records
        .par_iter()
        .map(|r| compare(r, &cfg.solver, cfg.oracle.power_tol_mw, cfg.oracle.rel_tol).map_err(at_point(&r.instance.id)))
        .collect();
    let (mut passed, mut failed) = (0usize, 0usize);
    let mut worst_power: f64 = 0.0;
    for (record, res) in records.iter().zip(results) {
        let c = res?;
        if c.pass {
            passed += 1;
        } else {
            failed += 1;
        }
        if c.problem == ProblemTag::P3 {
            worst_power = worst_power.max(c.abs_diff.unwrap_or(0.0));
        }
        let st = if c.pass { "ok" } else { "mismatch" };
        let row = vec![
            "compare".into(),
            c.id.clone(),
            c.problem.to_string(),
            path.display().to_string(),
            c.hash_ok.to_string(),
            record.status.clone(),
            opt(c.oracle_objective),
            opt(c.primary_objective),
            opt(c.abs_diff),
            opt(c.rel_diff),
            opt(c.ci_objective),
            opt(c.sinr_shortfall_db),
            c.pass.to_string(),
            st.into(),
        ];
        b.row(c.id.clone(), row, st, started);
    }
    b.extra("passed", passed.into());
    b.extra("failed", failed.into());
    b.extra("max_p3_power_diff_mw", serde_json::Value::String(num(worst_power)));
    Ok(())
}
