//! Minimum transmit power for CI precoding as the SINR target rises, with
//! and without a cap on the interference seen by the radar.

use ci_radar::ci::{solve_power_min_checked, CiProblem, LinkBudget};
use ci_radar::scene::{gen_channels, psk_frame};
use ci_radar::units::{linear_to_db, mw_to_dbm};

fn main() -> ci_radar::Result<()> {
    let cs = gen_channels(8, 4, 4, 7)?;
    let slot = psk_frame(4, 1, 4, 7)?.slot(0);
    println!("{:>8} {:>8} {:>12} {:>12} {:>10}", "gamma_db", "inr_db", "power_dbm", "max_inr_db", "min_margin");
    for inr_db in [f64::INFINITY, 10.0, 0.0] {
        for gamma_db in [0.0, 10.0, 20.0, 30.0] {
            let p = CiProblem::build(&cs, &slot, &LinkBudget::uniform(4, 4, gamma_db, inr_db))?;
            let out = solve_power_min_checked(&p, &Default::default(), &Default::default())?;
            let s = &out.solution;
            let max_inr = s.inr.iter().copied().fold(0.0, f64::max);
            let margin = s.ci_margins.iter().copied().fold(f64::INFINITY, f64::min);
            println!(
                "{gamma_db:>8} {inr_db:>8} {:>12.3} {:>12.3} {margin:>10.2e}",
                mw_to_dbm(s.power),
                linear_to_db(max_inr)
            );
        }
    }
    Ok(())
}
