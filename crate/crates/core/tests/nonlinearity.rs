mod common;

use delaywave::nonlinearity::{linear_bound_k, verify_bistable, FamilySpec, NonlinearityModel};
use proptest::prelude::*;
use rand::Rng;

fn steep() -> NonlinearityModel {
    NonlinearityModel::piecewise_steep(0.1, 0.3, 0.5, 1.4, 0.8, -20.0).unwrap()
}

fn gradient_gap(f: &NonlinearityModel, hi: f64) -> f64 {
    gradient_gap_at(f, hi, 1e-5)
}

fn gradient_gap_at(f: &NonlinearityModel, hi: f64, h: f64) -> f64 {
    (1..400)
        .map(|i| h + (hi - 2.0 * h) * i as f64 / 400.0)
        .map(|u| {
            let fd = (f.eval_f(u + h) - f.eval_f(u - h)) / (2.0 * h);
            (fd - f.eval_fprime(u).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn linear_bound_holds_on_random_points() {
    let mut rng = common::rng(11);
    for f in [NonlinearityModel::cubic_shift(2.0, 0.25).unwrap(), NonlinearityModel::ricker_square(8.0).unwrap(), steep()] {
        let k = linear_bound_k(&f).k;
        for _ in 0..10_000 {
            let u: f64 = rng.gen_range(0.0..10.0);
            if u > 0.0 {
                assert!(f.eval_f(u) - k * u <= 1e-12, "{:?} u={u}", f.kind());
            }
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let mild = NonlinearityModel::piecewise_steep(0.1, 0.3, 0.5, 1.4, 0.8, -5.0).unwrap();
    assert!(gradient_gap(&mild, 1.4) < 1e-6);
    // at mu = -20 the right drop has exponent 40 and the truncation error of
    // the difference quotient alone is ~3e-6 at h = 1e-5
    assert!(gradient_gap_at(&steep(), 1.4, 1e-6) < 1e-6);
    let r = NonlinearityModel::ricker_square(8.0).unwrap();
    assert!(gradient_gap(&r, 1.5) < 1e-6);
}

#[test]
fn family_spec_round_trips_through_json() {
    let spec: FamilySpec = serde_json::from_str(r#"{"family":"cubic_shift","k":2.0,"theta":0.25}"#).unwrap();
    let f = spec.build().unwrap();
    assert_eq!(f.theta(), 0.25);
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<FamilySpec>(&text).unwrap(), spec);
}

proptest! {
    #[test]
    fn cubic_fixed_points_are_exact(k in 0.1f64..5.0, theta in 0.05f64..0.45) {
        prop_assume!(k * theta <= 1.0);
        let f = NonlinearityModel::cubic_shift(k, theta).unwrap();
        prop_assert_eq!(f.eval_f(0.0), 0.0);
        prop_assert_eq!(f.eval_f(theta), theta);
        prop_assert_eq!(f.eval_f(1.0), 1.0);
        prop_assert!(gradient_gap(&f, f.m_max()) < 1e-6);
    }

    #[test]
    fn ricker_fixed_points_after_rescaling(beta in 2.8f64..20.0) {
        let f = NonlinearityModel::ricker_square(beta).unwrap();
        prop_assert_eq!(f.eval_f(0.0), 0.0);
        prop_assert!((f.eval_f(f.theta()) - f.theta()).abs() < 1e-12);
        prop_assert!((f.eval_f(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bistable_pass_keeps_f_above_theta(k in 0.5f64..4.0, theta in 0.05f64..0.45) {
        prop_assume!(k * theta <= 1.0);
        let f = NonlinearityModel::cubic_shift(k, theta).unwrap();
        let tol = 1e-8;
        let rep = verify_bistable(&f, tol);
        if rep.pass {
            let lo = theta + tol;
            let hi = f.m_max();
            let min = (0..=2000).map(|i| f.eval_f(lo + (hi - lo) * i as f64 / 2000.0)).fold(f64::INFINITY, f64::min);
            prop_assert!(min > theta, "{}", min);
        }
    }
}
