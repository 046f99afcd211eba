//! End-to-end experiments: parameter sweeps over channel draws, CSV tables
//! and a JSON summary per run.
//!
//! Every sweep point reuses the same channel draws (seeded from the run seed
//! and the draw index only), so trends along an axis are paired comparisons
//! and reruns are reproducible regardless of thread count.

mod bench;
mod comms;
pub mod config;
pub mod golden;
mod oracle;
mod radar;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::{Axis, ExperimentConfig, Mode, Search, Uncertain};
pub use oracle::instances;
pub use golden::{compare, load_golden, Comparison, GoldenRecord, Instance, InstanceFile, InstanceSeeds, ProblemTag};

use crate::error::{Error, Result};
use crate::scene::derive_seed;

const SYMBOL_STREAM: u64 = 0x5359_4d42;
const TRIAL_STREAM: u64 = 0x5452_4941;

/// Seed of the channel draw `d`, shared by every sweep point.
pub fn channel_seed(base: u64, draw: usize) -> u64 {
    derive_seed(base, draw as u64)
}

/// Seed of frame `f` of draw `d`.
pub fn symbol_seed(base: u64, draw: usize, frame: usize) -> u64 {
    derive_seed(derive_seed(base ^ SYMBOL_STREAM, draw as u64), frame as u64)
}

fn trial_seed(base: u64, point: usize, draw: usize) -> u64 {
    derive_seed(derive_seed(base ^ TRIAL_STREAM, point as u64), draw as u64)
}

/// An RFC 4180 table with a mandatory header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Shortest round-trip representation; empty for missing values.
pub(crate) fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let pct = |p: f64| s[((p * (s.len() - 1) as f64).round() as usize).min(s.len() - 1)];
        Self {
            count: s.len(),
            mean_ms: s.iter().sum::<f64>() / s.len() as f64,
            p50_ms: pct(0.5),
            p90_ms: pct(0.9),
            p99_ms: pct(0.99),
            max_ms: s[s.len() - 1],
        }
    }
}

/// Per-solve bookkeeping gathered from workers.
#[derive(Debug, Clone, Default)]
pub(crate) struct SolveLog {
    pub times_ms: Vec<f64>,
    pub iterations: Vec<usize>,
    pub non_converged: usize,
}

impl SolveLog {
    pub fn record(&mut self, started: Instant, iterations: usize, converged: bool) {
        self.times_ms.push(started.elapsed().as_secs_f64() * 1e3);
        self.iterations.push(iterations);
        self.non_converged += usize::from(!converged);
    }

    pub fn merge(&mut self, other: SolveLog) {
        self.times_ms.extend(other.times_ms);
        self.iterations.extend(other.iterations);
        self.non_converged += other.non_converged;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceStats {
    pub solves: usize,
    /// Solves whose first-choice solver stopped short; for power
    /// minimisation these were finished by the engine.
    pub non_converged: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: String,
    pub status: String,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: usize,
    pub infeasible_points: usize,
    pub wall_clock_s: f64,
    pub solve_time: TimingStats,
    pub convergence: ConvergenceStats,
    pub points: Vec<PointSummary>,
    /// Mode-specific extras.
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub table: Table,
    pub summary: Summary,
}

impl RunReport {
    /// 0 when every sweep point was feasible, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.infeasible_points > 0 {
            2
        } else {
            0
        }
    }

    /// Write the CSV to `path` and the summary next to it as `.json`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.table.to_csv()?)?;
        let summary_path = path.with_extension("json");
        std::fs::write(&summary_path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok(summary_path)
    }
}

/// A run that stopped on an error; `report` holds the rows finished before it.
#[derive(Debug)]
pub struct RunFailure {
    pub report: RunReport,
    pub error: Error,
}

/// Accumulates rows and per-point metadata while a mode runs.
pub(crate) struct Builder {
    table: Table,
    log: SolveLog,
    points: Vec<PointSummary>,
    infeasible: usize,
    extra: serde_json::Map<String, serde_json::Value>,
}

impl Builder {
    fn new(header: &[&str]) -> Self {
        Self { table: Table::new(header), log: SolveLog::default(), points: Vec::new(), infeasible: 0, extra: Default::default() }
    }

    pub fn row(&mut self, point: String, row: Vec<String>, status: &str, started: Instant) {
        self.table.push(row);
        if matches!(status, "infeasible" | "partial") {
            self.infeasible += 1;
        }
        self.points.push(PointSummary { point, status: status.to_string(), wall_clock_s: started.elapsed().as_secs_f64() });
    }

    pub fn log(&mut self, log: SolveLog) {
        self.log.merge(log);
    }

    pub fn extra(&mut self, key: &str, value: serde_json::Value) {
        self.extra.insert(key.to_string(), value);
    }

    fn finish(self, cfg: &ExperimentConfig, started: Instant) -> RunReport {
        let it = &self.log.iterations;
        let convergence = ConvergenceStats {
            solves: it.len(),
            non_converged: self.log.non_converged,
            mean_iterations: if it.is_empty() { 0.0 } else { it.iter().sum::<usize>() as f64 / it.len() as f64 },
            max_iterations: it.iter().copied().max().unwrap_or(0),
        };
        RunReport {
            summary: Summary {
                mode: cfg.mode,
                seed: cfg.seed,
                config: cfg.clone(),
                rows: self.table.rows.len(),
                infeasible_points: self.infeasible,
                wall_clock_s: started.elapsed().as_secs_f64(),
                solve_time: TimingStats::from_samples(&self.log.times_ms),
                convergence,
                points: self.points,
                extra: self.extra,
            },
            table: self.table,
        }
    }
}

/// `name=value` pairs identifying a sweep point.
pub(crate) fn label(pairs: &[(&str, f64)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect::<Vec<_>>().join(",")
}

pub(crate) fn at_point(point: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::AtPoint { point: point.to_string(), source: Box::new(e) }
}

/// Run the experiment described by `cfg`.
pub fn run(cfg: &ExperimentConfig) -> std::result::Result<RunReport, RunFailure> {
    let started = Instant::now();
    let fail = |error: Error| RunFailure { report: Builder::new(&[]).finish(cfg, started), error };
    cfg.validate().map_err(fail)?;
    let go = || -> std::result::Result<RunReport, RunFailure> {
        let mut b = Builder::new(header(cfg.mode));
        let res = match cfg.mode {
            Mode::PowerMin => comms::power_min(cfg, &mut b),
            Mode::InterfMin => comms::interf_min(cfg, &mut b),
            Mode::Robust => comms::robust(cfg, &mut b),
            Mode::RadarDetect | Mode::Crb => radar::run(cfg, &mut b),
            Mode::CompareOracle => oracle::run(cfg, &mut b),
            Mode::Bench => bench::run(cfg, &mut b),
        };
        let report = b.finish(cfg, started);
        match res {
            Ok(()) => Ok(report),
            Err(error) => Err(RunFailure { report, error }),
        }
    };
    match cfg.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| fail(Error::Config(format!("thread pool: {e}"))))?;
            pool.install(go)
        }
        None => go(),
    }
}

fn header(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::PowerMin => comms::POWER_MIN_HEADER,
        Mode::InterfMin => comms::INTERF_MIN_HEADER,
        Mode::Robust => comms::ROBUST_HEADER,
        Mode::RadarDetect => radar::DETECT_HEADER,
        Mode::Crb => radar::CRB_HEADER,
        Mode::CompareOracle => oracle::COMPARE_HEADER,
        Mode::Bench => bench::HEADER,
    }
}
