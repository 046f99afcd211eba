use ci_radar::ci::{dual_value_and_gradient, solve_gp, solve_p8, CiProblem, GpOptions, LinkBudget};
use ci_radar::radar::{crb, detection_probability, marcum_q1, InterferenceCovariance};
use ci_radar::scene::{gen_channels, psk_frame, radar_waveform, ArrayGeometry, RadarScene, SymbolSlot, WaveformMode};
use num_complex::Complex64;
use proptest::prelude::*;

fn problem(seed: u64, k: usize, gamma_db: f64, inr_db: f64) -> CiProblem {
    let cs = gen_channels(8, k, 4, seed).unwrap();
    CiProblem::build(&cs, &psk_frame(k, 1, 4, seed).unwrap().slot(0), &LinkBudget::uniform(k, 4, gamma_db, inr_db)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn weak_duality(seed in 0u64..1000, k in 1usize..5, lam in prop::collection::vec(0.0f64..3.0, 8), c in prop::collection::vec(0.0f64..2.0, 4)) {
        let p = problem(seed, k, 10.0, 10.0);
        let opt = solve_gp(&p, &GpOptions::default()).unwrap().converged().unwrap();
        let (f, _) = dual_value_and_gradient(&p, &lam[..2 * k], &c).unwrap();
        prop_assert!(-f <= opt.solution.power * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn solutions_satisfy_every_constraint(seed in 0u64..1000, k in 1usize..5, gamma in 0.0f64..25.0, inr in -5.0f64..20.0) {
        let p = problem(seed, k, gamma, inr);
        let out = solve_gp(&p, &GpOptions::default()).unwrap();
        prop_assume!(out.state.converged);
        prop_assert!(out.solution.ci_margins.iter().all(|&m| m >= -1e-8));
        for (inr, cap) in out.solution.inr.iter().zip(&p.inr_caps) {
            prop_assert!(*inr <= cap * (1.0 + 1e-6));
        }
    }

    #[test]
    fn common_symbol_phase_is_irrelevant(seed in 0u64..1000, shift in 0usize..4) {
        let cs = gen_channels(8, 3, 4, seed).unwrap();
        let budget = LinkBudget::uniform(3, 4, 15.0, f64::INFINITY);
        let slot = psk_frame(3, 1, 4, seed).unwrap().slot(0);
        let turned = SymbolSlot::new(slot.phases.iter().map(|p| p + shift as f64 * std::f64::consts::FRAC_PI_2).collect(), 4).unwrap();
        let a = solve_p8(&CiProblem::build(&cs, &slot, &budget).unwrap(), &GpOptions::default()).unwrap();
        let b = solve_p8(&CiProblem::build(&cs, &turned, &budget).unwrap(), &GpOptions::default()).unwrap();
        prop_assert!((a.solution.power - b.solution.power).abs() < 1e-6 * a.solution.power);
    }

    #[test]
    fn uncapped_power_is_linear_in_target(seed in 0u64..1000, gamma in 0.0f64..20.0, step in 1.0f64..10.0) {
        let lo = solve_p8(&problem(seed, 3, gamma, f64::INFINITY), &GpOptions::default()).unwrap();
        let hi = solve_p8(&problem(seed, 3, gamma + step, f64::INFINITY), &GpOptions::default()).unwrap();
        let ratio = hi.solution.power / lo.solution.power;
        prop_assert!((ratio / 10f64.powf(step / 10.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn marcum_q_is_a_tail_probability(a in 0.0f64..10.0, b in 0.0f64..10.0, da in 0.0f64..2.0, db in 0.0f64..2.0) {
        let q = marcum_q1(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(marcum_q1(a + da, b).unwrap() >= q - 1e-12);
        prop_assert!(marcum_q1(a, b + db).unwrap() <= q + 1e-12);
    }

    #[test]
    fn detection_beats_false_alarm(rho in 0.0f64..50.0, p_fa in 1e-4f64..0.5) {
        prop_assert!(detection_probability(rho, p_fa).unwrap() >= p_fa - 1e-12);
    }

    #[test]
    fn crb_is_inverse_in_snr(theta in -1.3f64..1.3, snr in 0.1f64..100.0, factor in 1.1f64..10.0) {
        let s = radar_waveform(4, 40, WaveformMode::Orthonormal, 1).unwrap();
        let sc = RadarScene::new(ArrayGeometry::ula(4), theta, Complex64::new(1.0, 0.0), 1.0, s, 1.0, 1.0).unwrap();
        let cov = InterferenceCovariance::none(4, 1.0);
        let a = crb(&sc, &cov, snr).unwrap().crb;
        let b = crb(&sc, &cov, snr * factor).unwrap().crb;
        prop_assert!(a > 0.0);
        prop_assert!((a / b / factor - 1.0).abs() < 1e-10);
    }
}
