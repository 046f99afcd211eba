mod common;

use ci_radar::ci::{solve_engine, solve_interf_min, solve_power_min_checked, sinr, CiProblem, LinkBudget};
use ci_radar::linalg::CMatrix;
use ci_radar::scene::{gen_channels, psk_frame, ChannelSet};
use ci_radar::units::dbm_to_mw;

#[test]
fn zero_radar_channel_means_zero_interference() {
    for seed in 0..5 {
        let cs = gen_channels(8, 4, 4, seed).unwrap();
        let cs = ChannelSet::new(cs.h.clone(), CMatrix::zeros(8, 4), cs.f.clone()).unwrap();
        let p = CiProblem::build(&cs, &psk_frame(4, 1, 4, seed).unwrap().slot(0), &LinkBudget::uniform(4, 4, 10.0, f64::INFINITY)).unwrap();
        let out = solve_interf_min(&p, dbm_to_mw(30.0), &Default::default()).unwrap();
        assert_eq!(out.objective, 0.0);
        assert!(out.interference.iter().all(|&i| i == 0.0));
        assert!(out.solution.ci_margins.iter().all(|&m| m >= -1e-8));
    }
}

#[test]
fn interference_falls_as_the_budget_grows() {
    let cs = gen_channels(8, 4, 4, 3).unwrap();
    let p = CiProblem::build(&cs, &psk_frame(4, 1, 4, 3).unwrap().slot(0), &LinkBudget::uniform(4, 4, 15.0, f64::INFINITY)).unwrap();
    let mut last = f64::INFINITY;
    for dbm in [24.0, 27.0, 30.0, 33.0] {
        match solve_interf_min(&p, dbm_to_mw(dbm), &Default::default()) {
            Ok(out) => {
                assert!(out.objective <= last + 1e-9);
                assert!(out.solution.power <= dbm_to_mw(dbm) * (1.0 + 1e-8));
                last = out.objective;
            }
            Err(e) => assert!(e.is_infeasible() && last.is_infinite(), "{e}"),
        }
    }
}

#[test]
fn fallback_matches_engine_on_hard_instances() {
    // tight caps at high targets strain the dual iteration
    for seed in [6u64, 39, 73] {
        let cs = gen_channels(8, 4, 4, seed).unwrap();
        let p = CiProblem::build(&cs, &psk_frame(4, 1, 4, seed).unwrap().slot(0), &LinkBudget::uniform(4, 4, 30.0, 0.0)).unwrap();
        let checked = solve_power_min_checked(&p, &Default::default(), &Default::default()).unwrap();
        let (engine, _) = solve_engine(&p, &Default::default()).unwrap();
        assert!(checked.converged);
        assert!((checked.solution.power - engine.power).abs() < 1e-6 * engine.power);
    }
}

#[test]
fn conventional_baseline_meets_its_targets() {
    for seed in 0..5 {
        let cs = gen_channels(8, 4, 4, seed).unwrap();
        let budget = LinkBudget::uniform(4, 4, 10.0, f64::INFINITY);
        let t = common::conventional_power_min(&cs, &budget).unwrap();
        for i in 0..4 {
            let s = sinr(&cs, &budget, &t, i);
            assert!(s >= budget.gamma(i) * (1.0 - 1e-6), "user {i}: {s}");
        }
    }
}
