use std::path::PathBuf;
use std::process::Command;

use ci_radar::harness::{self, ExperimentConfig, GoldenRecord, Instance, Mode, ProblemTag};
use ci_radar::linalg::CMatrix;

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ci-radar-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small(mode: Mode, overrides: &[&str]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_mode(mode)
        .with_overrides(&["trials.channel_draws=6", "trials.robust_samples=50", "trials.detection=500"])
        .unwrap()
        .with_overrides(overrides)
        .unwrap();
    cfg.seed = 11;
    cfg
}

fn csv(cfg: &ExperimentConfig) -> String {
    harness::run(cfg).map_err(|f| f.error).unwrap().table.to_csv().unwrap()
}

fn column(cfg: &ExperimentConfig, name: &str) -> Vec<f64> {
    let report = harness::run(cfg).map_err(|f| f.error).unwrap();
    report.table.column(name).unwrap().iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn same_config_gives_identical_csv() {
    let cfg = small(Mode::PowerMin, &["sweep.gamma_db=[10,20]", "sweep.inr_db=[0,null]"]);
    assert_eq!(csv(&cfg), csv(&cfg));
}

#[test]
fn thread_count_does_not_change_results() {
    for mode in [Mode::PowerMin, Mode::Robust, Mode::InterfMin] {
        let mut one = small(mode, &["sweep.gamma_db=[5,10]", "sweep.delta=0.02", "sweep.inr_db=20"]);
        one.threads = Some(1);
        let mut three = one.clone();
        three.threads = Some(3);
        assert_eq!(csv(&one), csv(&three), "{mode}");
    }
}

#[test]
fn different_seeds_differ() {
    let a = small(Mode::PowerMin, &[]);
    let mut b = a.clone();
    b.seed += 1;
    assert_ne!(csv(&a), csv(&b));
}

#[test]
fn power_grows_with_sinr_target() {
    let cfg = small(Mode::PowerMin, &["sweep.gamma_db={\"start\": 0, \"stop\": 30, \"step\": 5}", "sweep.inr_db=null"]);
    let power = column(&cfg, "mean_power_mw");
    assert_eq!(power.len(), 7);
    assert!(power.windows(2).all(|w| w[1] > w[0]), "{power:?}");
}

#[test]
fn robust_solutions_survive_sampled_errors() {
    let cfg = small(Mode::Robust, &["sweep.gamma_db=10", "sweep.inr_db=30", "sweep.delta=[0,0.02,0.05]"]);
    let report = harness::run(&cfg).map_err(|f| f.error).unwrap();
    assert!(report.table.column("feasible_draws").unwrap().iter().all(|f| *f == "6"));
    let violations = report.table.column("violations").unwrap();
    assert!(violations.iter().all(|v| *v == "0"), "{violations:?}");
    let power: Vec<f64> = report.table.column("mean_power_mw").unwrap().iter().map(|s| s.parse().unwrap()).collect();
    assert!(power.windows(2).all(|w| w[1] >= w[0]), "{power:?}");
}

#[test]
fn infeasible_points_set_exit_code_two() {
    let cfg = small(Mode::InterfMin, &["sweep.gamma_db=10", "sweep.power_dbm=[30,-10]"]);
    let report = harness::run(&cfg).map_err(|f| f.error).unwrap();
    assert_eq!(report.summary.infeasible_points, 1);
    assert_eq!(report.table.column("status").unwrap()[1], "infeasible");
    assert_eq!(report.exit_code(), 2);
    let ok = small(Mode::InterfMin, &["sweep.gamma_db=10"]);
    assert_eq!(harness::run(&ok).map_err(|f| f.error).unwrap().exit_code(), 0);
}

#[test]
fn report_writes_csv_and_summary() {
    let dir = temp_dir("report");
    let cfg = small(Mode::Crb, &["sweep.snr_db=[0,10]", "sweep.power_dbm=30", "sweep.gamma_db=6", "trials.channel_draws=1"]);
    let report = harness::run(&cfg).map_err(|f| f.error).unwrap();
    let summary_path = report.write(&dir.join("crb.csv")).unwrap();
    let text = std::fs::read_to_string(dir.join("crb.csv")).unwrap();
    assert!(text.starts_with("snr_db,gamma_db,power_dbm,crb"));
    assert_eq!(text.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary_path).unwrap()).unwrap();
    assert_eq!(summary["mode"], "crb");
    assert_eq!(summary["seed"], 11);
    let crb = column(&cfg, "crb");
    assert!((crb[0] / crb[1] - 10.0).abs() < 1e-9, "{crb:?}");
}

/// Export instances, answer them with our own CI solver as a stand-in
/// reference, then check the records through the harness.
#[test]
fn golden_round_trip() {
    let dir = temp_dir("golden");
    let export = dir.join("instances");
    let golden = dir.join("golden");
    std::fs::create_dir_all(&golden).unwrap();
    let mut cfg = small(Mode::CompareOracle, &["trials.channel_draws=2", "sweep.gamma_db=10", "sweep.inr_db=30", "sweep.delta=0.01"]);
    cfg.oracle.export = Some(export.clone());
    cfg.oracle.problems = vec![ProblemTag::P3, ProblemTag::P4, ProblemTag::P13];
    let report = harness::run(&cfg).map_err(|f| f.error).unwrap();
    assert_eq!(report.table.rows.len(), 6);

    let mut files: Vec<_> = std::fs::read_dir(&export).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    for (i, path) in files.iter().enumerate() {
        let inst = Instance::read(path).unwrap();
        let file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let (objective, w) = inst.solve_ci(&cfg.solver).unwrap();
        // perturb one record beyond tolerance
        let objective = if i == 0 { objective + 1.0 } else { objective };
        let record = GoldenRecord {
            problem: inst.problem,
            instance_hash: file["instance_hash"].as_str().unwrap().to_string(),
            objective: Some(objective),
            solution: Some(CMatrix::from_column_slice(w.len(), 1, w.as_slice())),
            status: "optimal".into(),
            randomizations: None,
            solver: Some("self".into()),
            instance: inst,
        };
        std::fs::write(golden.join(path.file_name().unwrap()), serde_json::to_string(&record).unwrap()).unwrap();
    }

    let mut check = cfg.clone();
    check.oracle.export = None;
    check.oracle.golden = Some(golden);
    let report = harness::run(&check).map_err(|f| f.error).unwrap();
    assert_eq!(report.summary.extra["passed"], 5);
    assert_eq!(report.summary.extra["failed"], 1);
    assert_eq!(report.exit_code(), 0);
    let status = report.table.column("status").unwrap();
    assert_eq!(status.iter().filter(|s| **s == "mismatch").count(), 1);
    assert!(report.table.column("hash_ok").unwrap().iter().all(|h| *h == "true"));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ci-radar")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = temp_dir("cli");
    let config = dir.join("cfg.json");
    std::fs::write(&config, r#"{"trials": {"channel_draws": 3}, "sweep": {"gamma_db": 10, "power_dbm": [30, -10]}}"#).unwrap();
    let config = config.to_str().unwrap();

    let out = cli(&["interf-min", "--config", config, "--set", "sweep.power_dbm=30", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("gamma_db,power_dbm,draws"));

    let csv_path = dir.join("out.csv");
    let out = cli(&["interf-min", "--config", config, "--out", csv_path.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(csv_path.exists() && dir.join("out.json").exists());

    let out = cli(&["power-min", "--set", "dims.n=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let out = cli(&["compare-oracle"]);
    assert_eq!(out.status.code(), Some(1));
}
