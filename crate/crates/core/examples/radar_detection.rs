//! Detection probability of the MIMO radar against the interference left by
//! CI precoding: closed form against Monte Carlo over radar SNR.

use std::f64::consts::PI;

use ci_radar::ci::{solve_interf_min, CiProblem, LinkBudget};
use ci_radar::radar::{
    analytic_detection, monte_carlo_detection, threshold_from_db, AngleSearch, InterferenceCovariance, InterferenceSource,
    MonteCarloConfig, SymbolLevelTable,
};
use ci_radar::scene::{gen_channels, psk_frame, radar_waveform, ArrayGeometry, RadarScene, WaveformMode};
use ci_radar::units::{db_to_linear, dbm_to_mw};
use num_complex::Complex64;

fn main() -> ci_radar::Result<()> {
    let cs = gen_channels(8, 4, 4, 31)?;
    let budget = LinkBudget::uniform(4, 4, 10.0, f64::INFINITY);
    let power = dbm_to_mw(30.0);
    let offset = psk_frame(1, 1, 4, 0)?.offset;
    // every QPSK symbol combination, so the interference has its exact distribution
    let table = SymbolLevelTable::build(&cs.g, 4, 4, offset, |slot| {
        Ok(solve_interf_min(&CiProblem::build(&cs, slot, &budget)?, power, &Default::default())?.solution.w)
    })?;
    let cov = InterferenceCovariance::new(table.covariance(), 1.0)?;
    let s = radar_waveform(4, 40, WaveformMode::Orthonormal, 1)?;
    let base = RadarScene::new(ArrayGeometry::ula(4), PI / 5.0, Complex64::new(1.0, 0.0), 1.0, s, 1.0, 1.0)?;
    let eta = threshold_from_db(13.5);
    println!("{} symbol tuples, mean transmit power {:.2} mW", table.len(), table.mean_power());
    println!("{:>7} {:>10} {:>10} {:>20}", "snr_db", "analytic", "simulated", "95% interval");
    for snr_db in [0.0, 4.0, 8.0, 12.0, 16.0] {
        let sc = base.with_snr(db_to_linear(snr_db));
        let (_, pd) = analytic_detection(&sc, &cov, eta)?;
        let mc = MonteCarloConfig { trials: 5_000, eta, search: AngleSearch::Known, seed: snr_db as u64 };
        let r = monte_carlo_detection(&sc, &table, &mc)?;
        println!("{snr_db:>7} {pd:>10.4} {:>10.4}   [{:.4}, {:.4}]", r.rate, r.ci_low, r.ci_high);
    }
    Ok(())
}
