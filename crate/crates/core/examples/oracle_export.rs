//! Write solver instances for an external reference solver and show how its
//! golden records are checked. Pass a directory to keep the files.

use ci_radar::harness::{self, ExperimentConfig, Mode, ProblemTag};

fn main() -> ci_radar::Result<()> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("ci-radar-instances"));
    let mut cfg = ExperimentConfig::for_mode(Mode::CompareOracle).with_overrides(&["trials.channel_draws=2", "sweep.gamma_db=[10,20]"])?;
    cfg.oracle.export = Some(dir);
    cfg.oracle.problems = vec![ProblemTag::P0, ProblemTag::P3, ProblemTag::P4];
    let report = harness::run(&cfg).map_err(|f| f.error)?;
    print!("{}", report.table.to_csv()?);
    println!("check golden records with: ci-radar compare-oracle --set oracle.golden=<dir>");
    Ok(())
}
