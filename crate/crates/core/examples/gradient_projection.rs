//! Inside the dual solver: convergence of the projected-gradient ascent with
//! fixed and Barzilai–Borwein trial steps, and the fast path for loose caps.

use ci_radar::ci::{fast_path, solve_gp, CiProblem, GpOptions, LinkBudget, StepRule};
use ci_radar::scene::{gen_channels, psk_frame};

fn main() -> ci_radar::Result<()> {
    let cs = gen_channels(8, 4, 4, 3)?;
    let slot = psk_frame(4, 1, 4, 3)?.slot(0);
    let p = CiProblem::build(&cs, &slot, &LinkBudget::uniform(4, 4, 20.0, 0.0))?;
    for rule in [StepRule::Fixed, StepRule::BarzilaiBorwein] {
        let opts = GpOptions { step_rule: rule, trace: true, ..Default::default() };
        let out = solve_gp(&p, &opts)?;
        let s = &out.state;
        println!(
            "{rule:?}: {} iterations, {} evaluations, primal {:.6} mW, dual {:.6} mW, residual {:.1e}",
            s.iterations, s.evaluations, out.solution.power, s.dual_value, s.residual
        );
        let marks: Vec<String> = s.trace.iter().step_by((s.trace.len() / 8).max(1)).map(|v| format!("{v:.3}")).collect();
        println!("  dual trace: {}", marks.join(" → "));
        println!("  λ = {:?}", s.lambda.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>());
        println!("  c = {:?}", s.c.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>());
    }
    let loose = CiProblem::build(&cs, &slot, &LinkBudget::uniform(4, 4, 20.0, 60.0))?;
    match fast_path(&loose, &GpOptions::default())? {
        Some(out) => println!("fast path at R = 60 dB: {:.6} mW", out.solution.power),
        None => println!("fast path declined at R = 60 dB"),
    }
    Ok(())
}
