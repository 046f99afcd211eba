use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ci::{GpOptions, LinkBudget};
use crate::error::{Error, Result};
use crate::qcqp::SolveOptions;
use crate::radar::{detection_threshold, threshold_from_db};
use crate::scene::{ErrorBounds, WaveformMode};
use crate::units::dbm_to_mw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    PowerMin,
    InterfMin,
    Robust,
    RadarDetect,
    Crb,
    CompareOracle,
    Bench,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::PowerMin => "power-min",
            Mode::InterfMin => "interf-min",
            Mode::Robust => "robust",
            Mode::RadarDetect => "radar-detect",
            Mode::Crb => "crb",
            Mode::CompareOracle => "compare-oracle",
            Mode::Bench => "bench",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One sweep axis. Accepts a number, a list, or `{"start", "stop", "step"}`
/// (inclusive of `stop` up to rounding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AxisRepr", into = "Vec<f64>")]
pub struct Axis(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum AxisRepr {
    Scalar(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl From<AxisRepr> for Axis {
    fn from(r: AxisRepr) -> Self {
        match r {
            AxisRepr::Scalar(x) => Axis(vec![x]),
            AxisRepr::List(v) => Axis(v),
            AxisRepr::Range { start, stop, step } => Axis::range(start, stop, step),
        }
    }
}

impl From<Axis> for Vec<f64> {
    fn from(a: Axis) -> Self {
        a.0
    }
}

impl Axis {
    pub fn single(x: f64) -> Self {
        Axis(vec![x])
    }

    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            // left empty so validation reports it
            return Axis(Vec::new());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Axis((0..count).map(|i| start + step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dims {
    /// BS antennas.
    pub n: usize,
    /// Downlink users.
    pub k: usize,
    /// Radar antennas.
    pub m: usize,
    /// Symbol slots per downlink frame.
    pub frame_len: usize,
    /// Radar pulse length L.
    pub radar_len: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self { n: 8, k: 4, m: 4, frame_len: 14, radar_len: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub sigma_c2_dbm: f64,
    pub sigma_r2_dbm: f64,
    pub radar_power_dbm: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self { sigma_c2_dbm: 0.0, sigma_r2_dbm: 0.0, radar_power_dbm: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub gamma_db: Axis,
    /// `null` entries mean no INR cap.
    #[serde(with = "inr_axis")]
    pub inr_db: Axis,
    pub power_dbm: Axis,
    pub delta: Axis,
    pub snr_db: Axis,
    /// User counts for `bench`.
    pub users: Axis,
}

mod inr_axis {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Scalar(Option<f64>),
        List(Vec<Option<f64>>),
        Range { start: f64, stop: f64, step: f64 },
    }

    pub fn serialize<S: Serializer>(a: &Axis, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::json::uncapped::serialize(&a.0, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Axis, D::Error> {
        let cap = |x: Option<f64>| x.unwrap_or(f64::INFINITY);
        Ok(match Repr::deserialize(d)? {
            Repr::Scalar(x) => Axis(vec![cap(x)]),
            Repr::List(v) => Axis(v.into_iter().map(cap).collect()),
            Repr::Range { start, stop, step } => Axis::range(start, stop, step),
        })
    }
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            gamma_db: Axis::single(20.0),
            inr_db: Axis::single(0.0),
            power_dbm: Axis::single(30.0),
            delta: Axis::single(0.0),
            snr_db: Axis::single(10.0),
            users: Axis::single(4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trials {
    pub channel_draws: usize,
    pub frames: usize,
    pub detection: u64,
    /// Error realisations per ball in the robust feasibility check.
    pub robust_samples: usize,
}

impl Default for Trials {
    fn default() -> Self {
        Self { channel_draws: 100, frames: 1, detection: 10_000, robust_samples: 1_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub gp: GpOptions,
    pub engine: SolveOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Search {
    /// Detector evaluated at the true direction.
    #[default]
    Known,
    /// GLRT maximised over a uniform angle grid.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    /// Target direction, radians.
    pub theta: f64,
    /// Detection threshold as `10·log₁₀ η`. Ignored when `p_fa` is set.
    pub eta_db: f64,
    pub p_fa: Option<f64>,
    pub search: Search,
    pub grid_points: usize,
    pub waveform: WaveformMode,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            theta: std::f64::consts::PI / 5.0,
            eta_db: 13.5,
            p_fa: None,
            search: Search::Known,
            grid_points: 721,
            waveform: WaveformMode::Orthonormal,
        }
    }
}

impl RadarConfig {
    /// Threshold on the normalised statistic.
    pub fn eta(&self) -> Result<f64> {
        match self.p_fa {
            Some(p) => detection_threshold(p),
            None => Ok(threshold_from_db(self.eta_db)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Uncertain {
    H,
    G,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustConfig {
    /// Channels whose estimates carry the swept error bound.
    pub uncertain: Vec<Uncertain>,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self { uncertain: vec![Uncertain::H, Uncertain::G, Uncertain::F] }
    }
}

impl RobustConfig {
    pub fn bounds(&self, delta: f64) -> ErrorBounds {
        let on = |c| if self.uncertain.contains(&c) { delta } else { 0.0 };
        ErrorBounds { delta_h: on(Uncertain::H), delta_g: on(Uncertain::G), delta_f: on(Uncertain::F) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Golden-record file (a JSON record or array of records) or a directory of them.
    pub golden: Option<PathBuf>,
    /// Directory that receives one instance file per exported problem.
    pub export: Option<PathBuf>,
    /// Problems to export.
    pub problems: Vec<crate::harness::golden::ProblemTag>,
    /// Absolute power tolerance for power-minimisation records, mW.
    pub power_tol_mw: f64,
    /// Relative tolerance for the other records.
    pub rel_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        use crate::harness::golden::ProblemTag;
        Self { golden: None, export: None, problems: vec![ProblemTag::P3], power_tol_mw: 0.05, rel_tol: 1e-4 }
    }
}

/// A whole experiment as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dims: Dims,
    /// PSK order.
    pub modulation: usize,
    pub noise: Noise,
    pub sweep: Sweep,
    pub trials: Trials,
    pub seed: u64,
    pub solver: SolverConfig,
    pub radar: RadarConfig,
    pub robust: RobustConfig,
    pub oracle: OracleConfig,
    /// CSV path; the JSON summary goes next to it with a `.json` extension.
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::PowerMin,
            dims: Dims::default(),
            modulation: 4,
            noise: Noise::default(),
            sweep: Sweep::default(),
            trials: Trials::default(),
            seed: 1,
            solver: SolverConfig::default(),
            radar: RadarConfig::default(),
            robust: RobustConfig::default(),
            oracle: OracleConfig::default(),
            out: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn for_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(s)?)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Apply `path=value` overrides, where `path` is dotted (`sweep.gamma_db`)
    /// and `value` is JSON, or a bare string when it does not parse as JSON.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            let (path, raw) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{}` is not of the form path=value", o.as_ref())))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, path, value)?;
        }
        Self::from_value(v)
    }

    pub fn budget(&self, gamma_db: f64, inr_db: f64) -> LinkBudget {
        LinkBudget {
            gamma_db: vec![gamma_db; self.dims.k],
            inr_db: vec![inr_db; self.dims.m],
            sigma_c2: dbm_to_mw(self.noise.sigma_c2_dbm),
            sigma_r2: dbm_to_mw(self.noise.sigma_r2_dbm),
            p_r: dbm_to_mw(self.noise.radar_power_dbm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        if d.n == 0 || d.k == 0 || d.m == 0 || d.frame_len == 0 || d.radar_len == 0 {
            return Err(Error::Config("dims must all be >= 1".into()));
        }
        if self.modulation < 2 {
            return Err(Error::Config(format!("modulation order must be >= 2, got {}", self.modulation)));
        }
        if self.trials.channel_draws == 0 || self.trials.frames == 0 {
            return Err(Error::Config("trial counts must be >= 1".into()));
        }
        let s = &self.sweep;
        for (name, axis, allow_inf) in [
            ("gamma_db", &s.gamma_db, false),
            ("inr_db", &s.inr_db, true),
            ("power_dbm", &s.power_dbm, false),
            ("delta", &s.delta, false),
            ("snr_db", &s.snr_db, false),
            ("users", &s.users, false),
        ] {
            if axis.0.is_empty() {
                return Err(Error::Config(format!("sweep.{name} is empty")));
            }
            if axis.0.iter().any(|x| x.is_nan() || (!allow_inf && x.is_infinite())) {
                return Err(Error::Config(format!("sweep.{name} has non-finite values")));
            }
        }
        if s.delta.0.iter().any(|x| *x < 0.0) {
            return Err(Error::Config("sweep.delta must be >= 0".into()));
        }
        if s.users.0.iter().any(|x| *x < 1.0 || x.fract() != 0.0) {
            return Err(Error::Config("sweep.users must hold positive integers".into()));
        }
        if matches!(self.threads, Some(0)) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(Error::Config("empty override path".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_forms() {
        let c = ExperimentConfig::from_json(r#"{"sweep": {"gamma_db": {"start": 10, "stop": 30, "step": 5}, "snr_db": 3, "inr_db": [0, null]}}"#).unwrap();
        assert_eq!(c.sweep.gamma_db.values(), &[10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(c.sweep.snr_db.values(), &[3.0]);
        assert_eq!(c.sweep.inr_db.values()[1], f64::INFINITY);
        c.validate().unwrap();
    }

    #[test]
    fn dotted_overrides() {
        let c = ExperimentConfig::default()
            .with_overrides(&["sweep.gamma_db=[5,6]", "dims.n=12", "mode=bench", "solver.gp.tol=1e-9", "radar.waveform=msequence"])
            .unwrap();
        assert_eq!(c.sweep.gamma_db.values(), &[5.0, 6.0]);
        assert_eq!(c.dims.n, 12);
        assert_eq!(c.mode, Mode::Bench);
        assert_eq!(c.solver.gp.tol, 1e-9);
        assert_eq!(c.radar.waveform, WaveformMode::Msequence);
        assert!(ExperimentConfig::default().with_overrides(&["dims.bogus=1"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(&["dims"]).is_err());
    }

    #[test]
    fn round_trip_keeps_uncapped_inr() {
        let mut c = ExperimentConfig::default();
        c.sweep.inr_db = Axis(vec![0.0, f64::INFINITY]);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_errors() {
        let mut c = ExperimentConfig::default();
        c.sweep.gamma_db = Axis::range(10.0, 5.0, 1.0);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.sweep.power_dbm = Axis(vec![f64::INFINITY]);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.modulation = 1;
        assert!(c.validate().is_err());
    }
}
