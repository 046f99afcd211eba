//! Worst-case robust CI precoding: power cost of robustness, and how often
//! the nominal and robust solutions break under sampled channel errors.

use ci_radar::ci::{solve_gp, CiProblem, GpOptions, LinkBudget};
use ci_radar::robust::{realisation_violation, solve_robust, RobustCiProblem};
use ci_radar::scene::{derive_seed, gen_channels, perturb_channels, psk_frame, ErrorBounds};

fn main() -> ci_radar::Result<()> {
    let cs = gen_channels(8, 4, 4, 5)?;
    let slot = psk_frame(4, 1, 4, 5)?.slot(0);
    let budget = LinkBudget::uniform(4, 4, 10.0, 20.0);
    let nominal = solve_gp(&CiProblem::build(&cs, &slot, &budget)?, &GpOptions::default())?.converged()?;
    let samples = 2000;
    println!("nominal power {:.3} mW", nominal.solution.power);
    println!("{:>6} {:>12} {:>18} {:>18}", "delta", "robust_mw", "nominal_broken", "robust_broken");
    for delta in [0.01, 0.02, 0.05, 0.1] {
        let bounds = ErrorBounds::uniform(delta);
        let rp = RobustCiProblem::build(&cs, &slot, &budget, bounds)?;
        let robust = match solve_robust(&rp, &Default::default()) {
            Ok(r) => r,
            Err(e) if e.is_infeasible() => {
                println!("{delta:>6} {:>12}", "infeasible");
                continue;
            }
            Err(e) => return Err(e),
        };
        let (mut nominal_broken, mut robust_broken) = (0, 0);
        for s in 0..samples {
            let truth = perturb_channels(&cs, bounds, derive_seed(99, s))?;
            nominal_broken += usize::from(realisation_violation(&truth, &slot, &budget, &nominal.solution.w2())? > 0.0);
            robust_broken += usize::from(realisation_violation(&truth, &slot, &budget, &robust.solution.w2())? > 0.0);
        }
        println!("{delta:>6} {:>12.3} {nominal_broken:>13}/{samples} {robust_broken:>13}/{samples}", robust.solution.power);
    }
    Ok(())
}
