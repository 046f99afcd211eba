//! Radar interference left after CI precoding under a per-symbol power
//! budget, across budgets and SINR targets.

use ci_radar::ci::{solve_interf_min, CiProblem, LinkBudget};
use ci_radar::scene::{gen_channels, psk_frame};
use ci_radar::units::dbm_to_mw;

fn main() -> ci_radar::Result<()> {
    let cs = gen_channels(8, 4, 4, 2)?;
    let frame = psk_frame(4, 14, 4, 2)?;
    println!("{:>8} {:>9} {:>9} {:>22}", "gamma_db", "power_dbm", "feasible", "mean_interference_mw");
    for gamma_db in [6.0, 12.0, 18.0] {
        let budget = LinkBudget::uniform(4, 4, gamma_db, f64::INFINITY);
        for power_dbm in [20.0, 24.0, 30.0] {
            let mut total = Vec::new();
            for l in 0..frame.len {
                let p = CiProblem::build(&cs, &frame.slot(l), &budget)?;
                match solve_interf_min(&p, dbm_to_mw(power_dbm), &Default::default()) {
                    Ok(out) => total.push(out.objective),
                    Err(e) if e.is_infeasible() => {}
                    Err(e) => return Err(e),
                }
            }
            let mean = total.iter().sum::<f64>() / total.len().max(1) as f64;
            println!("{gamma_db:>8} {power_dbm:>9} {:>6}/{:<2} {mean:>22.4e}", total.len(), frame.len);
        }
    }
    Ok(())
}
