//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use delaywave::box_solver::{solve_fixed_speed, solve_wave, BoxSolution, SolverConfig};
use delaywave::characteristic::{
    count_roots_strip, delta_eval, kappa_h_mu_with_step, oscillation_certificate, CharParams, Verdict,
};
use delaywave::discretization::Grid;
use delaywave::nonlinearity::{verify_oscillatory, Identity, NonlinearityModel};
use delaywave::simulator::{
    front_speed, richardson, shift_sweep, InitialDatum, InitialHistory, SimConfig, SimulationRun,
};
use delaywave::wave_analysis::{
    check_invariants, classify_tail, default_window, diagnose, energy_terms, locate_landmarks, periodicity,
    AnalysisConfig, TailClass, DEFAULT_TAIL_EPS,
};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn wave(f: &NonlinearityModel, tau: f64, a: f64, n: usize) -> BoxSolution {
    let cfg = SolverConfig { a, n, ..SolverConfig::default() };
    solve_wave(f, tau, cfg.grid().unwrap(), &cfg).unwrap().0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn linear_reference() -> Outcome {
    let cfg = SolverConfig::default();
    let err = |c: f64, n: usize| {
        let grid = Grid::new(10.0, n).unwrap();
        let p = solve_fixed_speed(&Identity, grid, c, 0.0, &cfg).unwrap();
        (0..grid.n() + 2)
            .map(|i| (p.values()[i] - common::linear_box_solution(c, 10.0, grid.x(i))).abs())
            .fold(0.0, f64::max)
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [0.0, 0.5, 1.0] {
        let (e1, e2) = (err(c, 2001), err(c, 4001));
        let ratio = e1 / e2;
        let ok = e1 < 1e-6 && (3.5..=4.5).contains(&ratio);
        pass &= ok;
        parts.push(format!("c={c}: err={e1:.3e} ratio={ratio:.3}{}", if ok { "" } else { " (!)" }));
    }
    outcome(pass, parts.join("; "))
}

fn zero_delay_speed() -> Outcome {
    let f = NonlinearityModel::cubic_shift(2.0, 0.25).unwrap();
    let closed = common::classical_bistable_speed(2.0, 0.25);
    let c_box = wave(&f, 0.0, 30.0, 3001).c;
    let init = InitialDatum::Step { at: 100.0 };
    let speeds: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = [0.2, 0.1, 0.05]
            .map(|dx| {
                let (f, init) = (&f, &init);
                s.spawn(move || {
                    let cfg = SimConfig { a: 150.0, dx, horizon: 300.0, ..SimConfig::default() };
                    front_speed(f, 0.0, init, &cfg).unwrap()
                })
            })
            .into_iter()
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let c_sim = speeds[1];
    let (c_rich, order) = richardson(speeds[0], speeds[1], speeds[2]);
    let pass = rel(c_box, c_sim) < 0.02
        && rel(c_box, closed) < 0.02
        && rel(c_sim, closed) < 0.02
        && rel(c_rich, closed) < 0.02;
    outcome(
        pass,
        format!("box c={c_box:.6} sim c={c_sim:.6} Richardson c={c_rich:.6} (order {order:.2}) closed form {closed}"),
    )
}

fn invariant_suite() -> Outcome {
    let mut violations = Vec::new();
    let mut count = 0;
    for theta in [0.2, 0.3, 0.4] {
        let f = NonlinearityModel::cubic_shift(2.0, theta).unwrap();
        let lip = f.fprime_sup(0.0, f.m_max());
        for frac in [0.1, 0.5, 0.9] {
            let tau = frac / lip;
            let sol = wave(&f, tau, 30.0, 3001);
            let rep = check_invariants(&sol, &f).unwrap();
            count += 1;
            for v in rep.violations() {
                violations.push(format!("theta={theta} tau={tau:.4}: {v}"));
            }
        }
    }
    outcome(violations.is_empty(), format!("{count} waves, violations: {violations:?}"))
}

fn small_delay_tails() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |label: String, f: &NonlinearityModel, tau: f64, a: f64, n: usize| {
        let sol = wave(f, tau, a, n);
        let lm = locate_landmarks(&sol, f.theta()).unwrap();
        let tail = classify_tail(&sol, default_window(&sol, lm.x_a), DEFAULT_TAIL_EPS);
        let ok = tail.class == TailClass::ConvergesTo1 && tail.sup_deviation < 1e-3;
        pass &= ok;
        parts.push(format!("{label}: {:?} sup|U-1|={:.2e}", tail.class, tail.sup_deviation));
    };
    let f = NonlinearityModel::cubic_shift(2.0, 0.25).unwrap();
    let lip = f.fprime_sup(0.0, f.m_max());
    check(format!("tau|f'|=0.9 (tau={:.4})", 0.9 / lip), &f, 0.9 / lip, 30.0, 3001);
    let g = NonlinearityModel::cubic_shift(1.0, 0.25).unwrap();
    let unit_max = (g.m_max() - 1.0).abs() < 1e-12;
    for tau in [1.0, 5.0] {
        check(format!("M={} tau={tau}", g.m_max()), &g, tau, 40.0, 4001);
    }
    outcome(pass && unit_max, parts.join("; "))
}

fn steep() -> NonlinearityModel {
    NonlinearityModel::piecewise_steep(0.1, 0.3, 0.5, 1.4, 0.8, -20.0).unwrap()
}

fn large_delay() -> Outcome {
    let f = steep();
    let osc = verify_oscillatory(&f, 1e-8).unwrap();
    if !osc.pass || f.mu1() > -10.0 {
        return outcome(false, format!("model rejected: oscillatory={} mu={}", osc.pass, f.mu1()));
    }
    let mut tau = 1.0;
    let mut tried = Vec::new();
    while tau <= 64.0 {
        let sol = wave(&f, tau, 60.0, 6001);
        let (d, _) = diagnose(&sol, &f, &AnalysisConfig::default()).unwrap();
        tried.push(format!("tau={tau}:{:?}", d.tail.class));
        if d.tail.class == TailClass::Oscillating {
            let cert = oscillation_certificate(&f, sol.c, tau).unwrap();
            let trapped = d.trapping_ok == Some(true);
            let sc_ok = d.sc_max_after.is_some_and(|m| m <= 2);
            let certified = cert.verdict == Verdict::CertifiedNonconvergent;
            return outcome(
                trapped && sc_ok && certified,
                format!(
                    "{} -> c={:.6}, trapping {trapped}, max sc after sigma*+h {:?}, certificate {:?}",
                    tried.join(" "),
                    sol.c,
                    d.sc_max_after,
                    cert.verdict
                ),
            );
        }
        tau *= 2.0;
    }
    outcome(false, format!("no oscillating wave: {}", tried.join(" ")))
}

fn characteristic_consistency() -> Outcome {
    let mut mismatches = 0;
    let mut asym = 0;
    let mut crowded = 0;
    let mut delta0 = 0.0f64;
    let triples = common::random_triples(50, 7);
    for &(mu, h, tau) in &triples {
        let p = CharParams::new(mu, h, tau).unwrap();
        let d0 = delta_eval(Complex64::new(0.0, 0.0), &p);
        delta0 = delta0.max((d0 - Complex64::new(mu - 1.0, 0.0)).norm() / (mu - 1.0).abs());
        let rep = count_roots_strip(&p).unwrap();
        let oracle = common::multistart_roots(mu, h, tau, rep.truncation_r);
        if oracle.len() as i64 != rep.winding_count {
            mismatches += 1;
        }
        for r in &rep.roots {
            let conj = rep
                .roots
                .iter()
                .any(|s| (s.re - r.re).abs() < 1e-8 && (s.im + r.im).abs() < 1e-8 && s.multiplicity == r.multiplicity);
            if !conj {
                asym += 1;
            }
        }
        if rep.max_per_vertical_line() > 2 {
            crowded += 1;
        }
    }
    let pass = mismatches == 0 && asym == 0 && crowded == 0 && delta0 <= f64::EPSILON;
    outcome(
        pass,
        format!(
            "{} triples: count mismatches {mismatches}, unpaired roots {asym}, lines with >2 roots {crowded}, max rel |Delta(0)-(mu-1)| {delta0:.1e}",
            triples.len()
        ),
    )
}

fn kappa_trend() -> Outcome {
    let mus = [-2.0, -5.0, -10.0, -20.0, -50.0];
    let coarse: Vec<_> = mus.iter().map(|&m| kappa_h_mu_with_step(m, 0.05).unwrap()).collect();
    let fine: Vec<_> = mus.iter().map(|&m| kappa_h_mu_with_step(m, 0.025).unwrap()).collect();
    let kappa_up = coarse.windows(2).all(|w| w[1].kappa_mu > w[0].kappa_mu);
    let h_down = coarse.windows(2).all(|w| w[1].h_mu < w[0].h_mu);
    let spread = coarse[4].h_mu < coarse[0].h_mu / 3.0;
    let self_conv = coarse.iter().zip(&fine).map(|(a, b)| rel(a.kappa_mu, b.kappa_mu)).fold(0.0, f64::max);
    let pass = kappa_up && h_down && spread && self_conv < 1e-4;
    let table: Vec<String> = mus
        .iter()
        .zip(&coarse)
        .map(|(m, k)| format!("mu={m}: kappa={:.6} h={:.6}", k.kappa_mu, k.h_mu))
        .collect();
    outcome(pass, format!("{}; halving change {self_conv:.1e}", table.join(", ")))
}

fn monotone_shift() -> Outcome {
    let g = NonlinearityModel::cubic_shift(1.0, 0.25).unwrap();
    let cfg = SimConfig { a: 150.0, dx: 0.1, horizon: 200.0, ..SimConfig::default() };
    let hs = [0.0, 0.05, 0.2, 0.5, 1.0];
    let reps = shift_sweep(&g, &hs, &InitialDatum::Step { at: 100.0 }, &cfg).unwrap();
    let c: Vec<f64> = reps.iter().map(|r| r.c_h).collect();
    let ordered = [0usize, 2, 3, 4].windows(2).all(|w| c[w[1]] <= c[w[0]]);
    let near = rel(c[1], c[0]);
    let decays = reps.iter().all(|r| {
        r.monotone_decay && r.distance_at_fit_end < 1e-3 && r.decay.is_some_and(|d| d.r_squared > 0.95)
    });
    let worst_r2 = reps.iter().filter_map(|r| r.decay.map(|d| d.r_squared)).fold(1.0, f64::min);
    let pass = ordered && near < 0.05 && decays;
    outcome(
        pass,
        format!(
            "c_h over h={hs:?}: {c:.5?}; non-increasing {ordered}; |c_0.05 - c_0|/c_0 = {near:.4}{}; decay monotone below 1e-3 {decays} (min R^2 {worst_r2:.4})",
            if near < 0.05 { "" } else { " (!)" }
        ),
    )
}

fn energy_identity() -> Outcome {
    let f = NonlinearityModel::cubic_shift(2.0, 0.25).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for tau in [0.0, 0.2] {
        let t1 = energy_terms(&wave(&f, tau, 30.0, 4000), &f, 24.0, 24.0).unwrap();
        let t2 = energy_terms(&wave(&f, tau, 30.0, 8000), &f, 24.0, 24.0).unwrap();
        let (r1, r2) = (t1.residual(), t2.residual());
        let ratio = r1 / r2;
        let ok = r1 < 1e-4 && (3.5..=4.5).contains(&ratio) && (tau != 0.0 || t1.cross == 0.0);
        pass &= ok;
        parts.push(format!("tau={tau}: residual {r1:.3e}, ratio {ratio:.3}, cross {:.3e}", t1.cross));
    }
    outcome(pass, parts.join("; "))
}

fn wavetrain() -> Outcome {
    let f = steep();
    let tau = 64.0;
    let sol = wave(&f, tau, 60.0, 6001);
    let (d, _) = diagnose(&sol, &f, &AnalysisConfig::default()).unwrap();
    let Some(spatial) = d.period else {
        return outcome(false, format!("box wave at tau={tau} has no spatial period ({:?})", d.tail.class));
    };
    let g = sol.grid();
    let xs: Vec<f64> = (0..g.n() + 2).map(|i| g.x(i) + 100.0).collect();
    let init = InitialDatum::Table { xs, us: sol.profile.values().to_vec() };
    let cfg = SimConfig { a: 200.0, dx: 0.2, horizon: 5000.0, ..SimConfig::default() };
    let mut run = SimulationRun::new(&f, tau, 0.0, &init, InitialHistory::Travelling { c: sol.c }, &cfg).unwrap();
    run.set_probes(vec![98.0], 10);
    run.run_until(cfg.horizon).unwrap();
    let c = run.fitted_speed().unwrap().slope;
    let z: Vec<f64> = run.probe_series.iter().filter(|p| p.0 >= 2500.0).map(|p| p.1[0]).collect();
    let Some(temporal) = periodicity(&z, 10.0 * run.dt()) else {
        return outcome(false, "lab-point series is not periodic".into());
    };
    let match_err = rel(temporal.period * c, spatial.period);
    let pass = temporal.spacing_spread < 0.05 && match_err < 0.05;
    outcome(
        pass,
        format!(
            "tau={tau}: temporal period {:.4} (trough spread {:.2e}), front speed {c:.6}, spatial period {:.4}, |T c - L|/L = {match_err:.4}",
            temporal.period, temporal.spacing_spread, spatial.period
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("linear reference exactness", Duration::from_secs(5), linear_reference),
        ("zero-delay speed anchor", Duration::from_secs(120), zero_delay_speed),
        ("a priori invariant suite", Duration::from_secs(300), invariant_suite),
        ("small delay / M=1 tails", Duration::from_secs(300), small_delay_tails),
        ("large delay oscillation", Duration::from_secs(900), large_delay),
        ("characteristic consistency", Duration::from_secs(120), characteristic_consistency),
        ("kappa_mu / h_mu trend", Duration::from_secs(120), kappa_trend),
        ("monotone shifted problem", Duration::from_secs(600), monotone_shift),
        ("energy identity", Duration::from_secs(60), energy_identity),
        ("wavetrain", Duration::from_secs(600), wavetrain),
    ];
    let results: Vec<(Outcome, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, _, run)| {
                s.spawn(move || {
                    let t0 = Instant::now();
                    let out = run();
                    (out, t0.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (k, ((name, budget, _), (out, took))) in criteria.iter().zip(&results).enumerate() {
        let pass = out.pass && took <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {:>2} [{name}] ({:.1}s of {}s): {}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            took.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
