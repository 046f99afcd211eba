//! Radar-side metrics: interference covariance, GLRT detection, Cramér–Rao bound.

mod covariance;
mod crb;
mod detect;
mod monte_carlo;

pub use covariance::{matched_filter, InterferenceCovariance};
pub use crb::{crb, crb_via_fim, CrbReport};
pub use detect::{
    detection_probability, detection_threshold, effective_noncentrality, false_alarm_probability, glrt_statistic, marcum_q1,
    noncentrality, threshold_from_db, wilson_interval, DetectionReport, Detector,
};
pub use monte_carlo::{
    analytic_detection, monte_carlo_detection, AngleSearch, FixedPrecoders, GaussianInterference, InterferenceSource,
    MonteCarloConfig, MonteCarloResult, NoInterference, SymbolLevelTable,
};
