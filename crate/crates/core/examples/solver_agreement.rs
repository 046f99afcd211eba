//! The dual projected-gradient solver against the generic barrier engine:
//! same answers, very different run times.

use std::time::Instant;

use ci_radar::ci::{solve_engine, solve_gp, CiProblem, GpOptions, LinkBudget};
use ci_radar::scene::{gen_channels, psk_frame};

fn main() -> ci_radar::Result<()> {
    println!("{:>2} {:>10} {:>10} {:>12} {:>8}", "k", "gp_ms", "engine_ms", "max_diff_mw", "speedup");
    for k in 2..=6 {
        let budget = LinkBudget::uniform(k, 4, 20.0, 5.0);
        let (mut gp_ms, mut engine_ms, mut worst) = (0.0, 0.0, 0.0f64);
        for seed in 0..20 {
            let p = CiProblem::build(&gen_channels(12, k, 4, seed)?, &psk_frame(k, 1, 4, seed)?.slot(0), &budget)?;
            let t = Instant::now();
            let gp = solve_gp(&p, &GpOptions::default())?.converged()?;
            gp_ms += t.elapsed().as_secs_f64() * 1e3;
            let t = Instant::now();
            let (engine, _) = solve_engine(&p, &Default::default())?;
            engine_ms += t.elapsed().as_secs_f64() * 1e3;
            worst = worst.max((gp.solution.power - engine.power).abs());
        }
        println!("{k:>2} {gp_ms:>10.2} {engine_ms:>10.2} {worst:>12.2e} {:>7.1}x", engine_ms / gp_ms);
    }
    Ok(())
}
