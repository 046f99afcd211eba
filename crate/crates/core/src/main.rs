use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ci_radar::harness::{self, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(name = "ci-radar", version, about = "Constructive-interference precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean minimum transmit power over (SINR, INR) sweeps.
    PowerMin(Common),
    /// Mean radar interference under a transmit power budget.
    InterfMin(Common),
    /// Worst-case robust power with sampled feasibility checks.
    Robust(Common),
    /// Analytic and simulated radar detection probability.
    RadarDetect(Common),
    /// Cramér–Rao bound on the target angle.
    Crb(Common),
    /// Export solver instances and/or check golden records.
    CompareOracle(Common),
    /// Time the dual solver against the generic engine.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (summary written next to it as .json); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Override a config leaf, e.g. `--set sweep.gamma_db=[10,20]`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

fn config(mode: Mode, c: &Common) -> ci_radar::Result<ExperimentConfig> {
    let base = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = base.with_overrides(&c.overrides)?;
    cfg.mode = mode;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    Ok(cfg)
}

fn emit(report: &harness::RunReport, out: Option<&PathBuf>) -> ci_radar::Result<()> {
    match out {
        Some(path) => {
            let summary = report.write(path)?;
            eprintln!("wrote {} and {}", path.display(), summary.display());
        }
        None => print!("{}", report.table.to_csv()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.command {
        Command::PowerMin(c) => (Mode::PowerMin, c),
        Command::InterfMin(c) => (Mode::InterfMin, c),
        Command::Robust(c) => (Mode::Robust, c),
        Command::RadarDetect(c) => (Mode::RadarDetect, c),
        Command::Crb(c) => (Mode::Crb, c),
        Command::CompareOracle(c) => (Mode::CompareOracle, c),
        Command::Bench(c) => (Mode::Bench, c),
    };
    let cfg = match config(mode, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match harness::run(&cfg) {
        Ok(report) => {
            if let Err(e) = emit(&report, cfg.out.as_ref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if report.exit_code() == 2 {
                eprintln!("{} sweep point(s) had infeasible draws", report.summary.infeasible_points);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(failure) => {
            // validation failures have no table at all
            if !failure.report.table.header.is_empty() {
                if let Err(e) = emit(&failure.report, cfg.out.as_ref()) {
                    eprintln!("error writing partial results: {e}");
                }
            }
            eprintln!("error: {}", failure.error);
            ExitCode::from(1)
        }
    }
}
