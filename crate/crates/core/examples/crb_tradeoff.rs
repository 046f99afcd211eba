//! Communication/sensing trade-off: angle-estimation RMSE bound at the radar
//! as the downlink SINR target rises under interference minimisation.

use std::f64::consts::PI;

use ci_radar::ci::{solve_interf_min, CiProblem, LinkBudget};
use ci_radar::radar::{crb, InterferenceCovariance};
use ci_radar::scene::{gen_channels, psk_frame, radar_waveform, ArrayGeometry, RadarScene, WaveformMode};
use ci_radar::units::{db_to_linear, dbm_to_mw};
use num_complex::Complex64;

fn main() -> ci_radar::Result<()> {
    let s = radar_waveform(4, 40, WaveformMode::Orthonormal, 1)?;
    let sc = RadarScene::new(ArrayGeometry::ula(4), PI / 5.0, Complex64::new(1.0, 0.0), 1.0, s, 1.0, 1.0)?
        .with_snr(db_to_linear(10.0));
    let free = crb(&sc, &InterferenceCovariance::none(4, 1.0), sc.snr())?;
    println!("interference-free RMSE {:.5} rad", free.rmse);
    println!("{:>8} {:>6} {:>12}", "gamma_db", "draws", "rmse_rad");
    for gamma_db in [4.0, 8.0, 12.0, 16.0] {
        let budget = LinkBudget::uniform(4, 4, gamma_db, f64::INFINITY);
        let mut rmse = Vec::new();
        for seed in 0..10 {
            let cs = gen_channels(8, 4, 4, seed)?;
            let frame = psk_frame(4, 14, 4, seed)?;
            let ws: ci_radar::Result<Vec<_>> = (0..frame.len)
                .map(|l| {
                    let p = CiProblem::build(&cs, &frame.slot(l), &budget)?;
                    Ok(solve_interf_min(&p, dbm_to_mw(30.0), &Default::default())?.solution.w)
                })
                .collect();
            match ws {
                Ok(ws) => rmse.push(crb(&sc, &InterferenceCovariance::from_slot_vectors(&cs.g, &ws, 1.0)?, sc.snr())?.rmse),
                Err(e) if e.is_infeasible() => {}
                Err(e) => return Err(e),
            }
        }
        let mean = rmse.iter().sum::<f64>() / rmse.len().max(1) as f64;
        println!("{gamma_db:>8} {:>6} {mean:>12.5}", rmse.len());
    }
    Ok(())
}
