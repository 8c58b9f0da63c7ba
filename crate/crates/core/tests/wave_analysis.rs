use delaywave::box_solver::{solve_wave, BoxSolution, SolverConfig};
use delaywave::nonlinearity::NonlinearityModel;
use delaywave::wave_analysis::{
    check_invariants, diagnose, locate_landmarks, sc_count, AnalysisConfig, TailClass,
};
use proptest::prelude::*;

fn steep() -> NonlinearityModel {
    NonlinearityModel::piecewise_steep(0.1, 0.3, 0.5, 1.4, 0.8, -20.0).unwrap()
}

fn wave(f: &NonlinearityModel, tau: f64) -> BoxSolution {
    let cfg = SolverConfig { a: 60.0, n: 6001, ..SolverConfig::default() };
    solve_wave(f, tau, cfg.grid().unwrap(), &cfg).unwrap().0
}

#[test]
fn delayed_steep_wave_overshoots_and_stays_trapped() {
    let f = steep();
    let sol = wave(&f, 2.0);
    let (d, sc) = diagnose(&sol, &f, &AnalysisConfig::default()).unwrap();
    assert_eq!(d.tail.class, TailClass::Oscillating);
    let ss = d.sigma_star.expect("first maximum");
    assert!(sol.profile.shifted_sample(ss) > 1.0);
    assert_eq!(d.trapping_ok, Some(true));
    assert!(sc.non_increasing(), "{:?}", &sc.entries[..sc.entries.len().min(20)]);
    assert!(d.invariants.liminf_proxy > 0.8 - 1e-3);
}

#[test]
fn small_delay_steep_wave_is_monotone_to_one() {
    let f = steep();
    let sol = wave(&f, 0.05);
    let lm = locate_landmarks(&sol, f.theta()).unwrap();
    let inv = check_invariants(&sol, &f).unwrap();
    assert_eq!(inv.theta_crossings, 1);
    assert!(inv.bounds_ok);
    let (d, _) = diagnose(&sol, &f, &AnalysisConfig::default()).unwrap();
    assert_eq!(d.tail.class, TailClass::ConvergesTo1, "sigma* = {:?}", lm.sigma_star);
}

/// Sign alternations counted the long way: drop zeros, compare neighbours.
fn naive_sc(v: &[f64]) -> usize {
    let nz: Vec<f64> = v.iter().cloned().filter(|&x| x != 0.0).collect();
    nz.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

proptest! {
    #[test]
    fn sc_count_agrees_with_naive_count(v in prop::collection::vec(prop_oneof![Just(0.0), -1.0f64..1.0], 1..60)) {
        match sc_count(&v) {
            None => prop_assert!(v.iter().all(|&x| x == 0.0)),
            Some(n) => prop_assert_eq!(n, naive_sc(&v)),
        }
    }
}
