//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `λ²/h² - λ/τ + μ e^{-λ} - 1` and its derivative, written out again
/// rather than taken from the library.
pub fn oracle_delta(mu: f64, h: f64, tau: f64, l: Complex64) -> (Complex64, Complex64) {
    let e = (-l).exp();
    (
        l * l / (h * h) - l / tau + mu * e - 1.0,
        2.0 * l / (h * h) - 1.0 / tau - mu * e,
    )
}

/// Multistart Newton on a 15×15 grid of starts covering
/// `[-r, 0] × [-2π, 2π]`, deduplicated at 1e-6.
pub fn multistart_roots(mu: f64, h: f64, tau: f64, r: f64) -> Vec<Complex64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut roots: Vec<Complex64> = Vec::new();
    for i in 0..15 {
        for j in 0..15 {
            let mut l = Complex64::new(-r + r * (i as f64 + 0.5) / 15.0, -two_pi + two_pi * (2.0 * j as f64 + 1.0) / 15.0);
            let mut ok = false;
            for _ in 0..200 {
                let (d, dp) = oracle_delta(mu, h, tau, l);
                let step = d / dp;
                l -= step;
                if !l.re.is_finite() || !l.im.is_finite() || l.re > 50.0 || l.re < -r - 50.0 {
                    break;
                }
                if step.norm() < 1e-13 * (1.0 + l.norm()) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let inside = l.re <= 1e-9 && l.im.abs() <= two_pi + 1e-9 && l.re >= -r;
            if inside && !roots.iter().any(|z| (z - l).norm() < 1e-6) {
                roots.push(l);
            }
        }
    }
    roots
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `(μ, h, τ)` with `μ ∈ [-50, -1.1]`, `h ∈ [0.05, 3]`, `τ ∈ [0.1, 50]`.
pub fn random_triples(n: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut g = rng(seed);
    (0..n)
        .map(|_| (g.gen_range(-50.0..-1.1), g.gen_range(0.05..3.0), g.gen_range(0.1..50.0)))
        .collect()
}

/// Speed of the classical front of `u_t = u_xx + k u (u - θ)(1 - u)`:
/// the profile `1/(1 + e^{-x √(k/2)})` gives `√(k/2) (1 - 2θ)`.
pub fn classical_bistable_speed(k: f64, theta: f64) -> f64 {
    (k / 2.0).sqrt() * (1.0 - 2.0 * theta)
}

/// `-u'' + c u' = 0` on `[-a, a]` with `u(-a) = 0`, `u(a) = 1`, in the
/// naive form (fine for `|c| a` up to a few hundred).
pub fn linear_box_solution(c: f64, a: f64, x: f64) -> f64 {
    if c == 0.0 {
        (x + a) / (2.0 * a)
    } else {
        ((c * x).exp() - (-c * a).exp()) / ((c * a).exp() - (-c * a).exp())
    }
}
