//! Named end-to-end scenarios with pass/fail checks.

use delaywave::box_solver::{solve_wave, BoxSolution, SolverConfig};
use delaywave::characteristic::{oscillation_certificate, Verdict};
use delaywave::nonlinearity::{verify_oscillatory, FamilySpec, NonlinearityModel};
use delaywave::simulator::{shift_sweep, InitialDatum, SimConfig};
use delaywave::wave_analysis::{
    classify_tail, default_window, diagnose, locate_landmarks, TailClass, TailReport,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Scenario, SimulationSection};
use crate::error::{CliError, Result};
use crate::output::{num, OutDir};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    scenario: Scenario,
    pass: bool,
    checks: &'a [Check],
}

fn cubic(k: f64, theta: f64) -> FamilySpec {
    FamilySpec::CubicShift { k, theta }
}

/// Fill every section the scenario needs but the config leaves open.
pub fn resolve(mut cfg: ExperimentConfig) -> ExperimentConfig {
    let s = &mut cfg.suite;
    let (model, solver) = match s.scenario {
        Scenario::SmallDelay => {
            s.taus.get_or_insert_with(|| vec![0.1, 0.5, 0.9]);
            (cubic(2.0, 0.25), Some((30.0, 3001)))
        }
        Scenario::MOne => {
            s.taus.get_or_insert_with(|| vec![1.0, 5.0]);
            (cubic(1.0, 0.25), Some((40.0, 4001)))
        }
        Scenario::LargeDelay => {
            s.taus.get_or_insert_with(|| vec![1.0, 2.0, 64.0]);
            let steep =
                FamilySpec::PiecewiseSteep { theta: 0.1, alpha: 0.3, beta_peak: 0.5, m1: 1.4, m2: 0.8, mu: -20.0 };
            (steep, Some((60.0, 6001)))
        }
        Scenario::MonotoneShift => {
            s.hs.get_or_insert_with(|| vec![0.0, 0.05, 0.2, 0.5, 1.0]);
            cfg.simulation.get_or_insert_with(|| SimulationSection {
                numerics: SimConfig { a: 150.0, dx: 0.1, horizon: 200.0, ..SimConfig::default() },
                initial: InitialDatum::Step { at: 100.0 },
                ..SimulationSection::default()
            });
            (cubic(1.0, 0.25), None)
        }
    };
    cfg.nonlinearity.get_or_insert(model);
    if let Some((a, n)) = solver {
        cfg.solver.get_or_insert_with(|| SolverConfig { a, n, ..SolverConfig::default() });
    }
    cfg
}

fn wave(f: &NonlinearityModel, tau: f64, cfg: &ExperimentConfig) -> Result<BoxSolution> {
    let s = cfg.solver.clone().unwrap_or_default();
    Ok(solve_wave(f, tau, s.grid()?, &s)?.0)
}

fn tail_of(sol: &BoxSolution, f: &NonlinearityModel, cfg: &ExperimentConfig) -> Result<TailReport> {
    let lm = locate_landmarks(sol, f.theta())?;
    let window = cfg.analysis.window.unwrap_or_else(|| default_window(sol, lm.x_a));
    Ok(classify_tail(sol, window, cfg.analysis.eps))
}

fn converging_tails(f: &NonlinearityModel, taus: &[f64], cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &tau in taus {
        let sol = wave(f, tau, cfg)?;
        let tail = tail_of(&sol, f, cfg)?;
        let pass = tail.class == TailClass::ConvergesTo1 && tail.sup_deviation < cfg.analysis.eps;
        checks.push(check(
            format!("tail at tau={}", num(tau)),
            pass,
            format!("c={} {:?} sup|U-1|={:e}", num(sol.c), tail.class, tail.sup_deviation),
        ));
        rows.push(vec![num(tau), num(sol.c), format!("{:?}", tail.class), num(tail.sup_deviation)]);
    }
    out.csv("tails.csv", &["tau", "c", "class", "sup_deviation"], rows)?;
    Ok(checks)
}

fn small_delay(f: &NonlinearityModel, cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Check>> {
    let fractions = cfg.suite.taus.clone().unwrap_or_default();
    let lip = f.fprime_sup(0.0, f.m_max());
    let mut checks: Vec<Check> = fractions
        .iter()
        .map(|&q| check(format!("tau|f'|={} below 1", num(q)), (0.0..1.0).contains(&q), format!("sup|f'|={}", num(lip))))
        .collect();
    let taus: Vec<f64> = fractions.iter().map(|q| q / lip).collect();
    checks.extend(converging_tails(f, &taus, cfg, out)?);
    Ok(checks)
}

fn m_one(f: &NonlinearityModel, cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Check>> {
    let unit = (f.m_max() - 1.0).abs() < 1e-12;
    let mut checks = vec![check("max f = 1", unit, format!("M={}", num(f.m_max())))];
    checks.extend(converging_tails(f, cfg.suite.taus.as_deref().unwrap_or_default(), cfg, out)?);
    Ok(checks)
}

fn large_delay(f: &NonlinearityModel, cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Check>> {
    let schedule = cfg.suite.taus.clone().unwrap_or_default();
    let [tau0, factor, cap] = schedule[..] else {
        return Err(CliError::Config("suite.taus must be [tau0, factor, cap] for large-delay".into()));
    };
    if !(tau0 > 0.0 && factor > 1.0) {
        return Err(CliError::Config("large-delay needs tau0 > 0 and factor > 1".into()));
    }
    let osc = verify_oscillatory(f, cfg.verify.tol)?;
    out.json("oscillatory.json", &osc)?;
    let mut checks = vec![
        check(
            "oscillatory assumption",
            osc.pass,
            if osc.pass { "all clauses hold".to_string() } else { osc.failed().join(", ") },
        ),
        check("f'(1) <= -10", f.mu1() <= -10.0, format!("mu={}", num(f.mu1()))),
    ];
    let mut tau = tau0;
    let mut tried = Vec::new();
    while tau <= cap * (1.0 + 1e-12) {
        let sol = wave(f, tau, cfg)?;
        let (d, sc) = diagnose(&sol, f, &cfg.analysis)?;
        tried.push(format!("tau={}:{:?}", num(tau), d.tail.class));
        if d.tail.class == TailClass::Oscillating {
            sol.profile.write_csv(&out.path("profile.csv"))?;
            sc.write_csv(&out.path("sc_history.csv"))?;
            out.json("diagnostics.json", &d)?;
            let cert = oscillation_certificate(f, sol.c, tau)?;
            out.json("certificate.json", &cert)?;
            checks.push(check("oscillating wave found", true, format!("{} c={}", tried.join(" "), num(sol.c))));
            checks.push(check(
                "trapping after sigma*",
                d.trapping_ok == Some(true),
                match &d.trapping {
                    Some(t) => format!("{} <= U <= {} within [{}, {}]", num(t.min_u), num(t.max_u), num(t.lower), num(t.upper)),
                    None => "no sigma*".into(),
                },
            ));
            checks.push(check(
                "sign changes after sigma*+h at most 2",
                d.sc_max_after.is_some_and(|m| m <= 2),
                format!("{:?}", d.sc_max_after),
            ));
            checks.push(check("even-rounded sc non-increasing", d.sc_non_increasing, format!("{} translates", sc.entries.len())));
            checks.push(check(
                "non-convergence certificate",
                cert.verdict == Verdict::CertifiedNonconvergent,
                format!("{:?}, strip count {}", cert.verdict, cert.report.winding_count),
            ));
            return Ok(checks);
        }
        tau *= factor;
    }
    checks.push(check("oscillating wave found", false, tried.join(" ")));
    Ok(checks)
}

fn monotone_shift(g: &NonlinearityModel, cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Check>> {
    let mut hs = cfg.suite.hs.clone().unwrap_or_default();
    hs.sort_by(f64::total_cmp);
    if hs[0] != 0.0 {
        return Err(CliError::Config("suite.hs must include 0".into()));
    }
    let sim = cfg.simulation.clone().unwrap_or_default();
    let reps = shift_sweep(g, &hs, &sim.initial, &sim.numerics)?;
    out.csv(
        "shift.csv",
        &["h", "c_h", "kappa", "r_squared", "floor", "distance_at_fit_end", "monotone_decay"],
        reps.iter().map(|r| {
            vec![
                num(r.h),
                num(r.c_h),
                r.decay.map(|d| num(d.kappa)).unwrap_or_default(),
                r.decay.map(|d| num(d.r_squared)).unwrap_or_default(),
                num(r.floor),
                num(r.distance_at_fit_end),
                r.monotone_decay.to_string(),
            ]
        }),
    )?;
    out.csv(
        "distances.csv",
        &["h", "t", "distance"],
        reps.iter().flat_map(|r| r.distances.iter().map(move |(t, d)| vec![num(r.h), num(*t), num(*d)])),
    )?;
    let c: Vec<f64> = reps.iter().map(|r| r.c_h).collect();
    let c_list = c.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ");
    let mut checks = vec![check("c_h non-increasing", c.windows(2).all(|w| w[1] <= w[0]), c_list)];
    if let Some(k) = hs.iter().position(|&h| h > 0.0 && h <= 0.05) {
        let rel = (c[k] - c[0]).abs() / c[0].abs();
        checks.push(check(
            format!("|c_h - c_0| < 5% at h={}", num(hs[k])),
            rel < 0.05,
            format!("relative change {}", num(rel)),
        ));
    }
    for r in &reps {
        let r2 = r.decay.map(|d| d.r_squared);
        checks.push(check(
            format!("decay at h={}", num(r.h)),
            r.monotone_decay && r.distance_at_fit_end < 1e-3 && r2.is_some_and(|v| v > 0.95),
            format!(
                "monotone {}, distance {:e}, R^2 {}",
                r.monotone_decay,
                r.distance_at_fit_end,
                r2.map(num).unwrap_or_else(|| "none".into())
            ),
        ));
    }
    Ok(checks)
}

/// Run `cfg.suite.scenario` (already [`resolve`]d); true iff every check passes.
pub fn run(cfg: &ExperimentConfig, out: &OutDir) -> Result<bool> {
    let f = cfg.model_spec()?.build()?;
    let checks = match cfg.suite.scenario {
        Scenario::SmallDelay => small_delay(&f, cfg, out)?,
        Scenario::MOne => m_one(&f, cfg, out)?,
        Scenario::LargeDelay => large_delay(&f, cfg, out)?,
        Scenario::MonotoneShift => monotone_shift(&f, cfg, out)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    out.json("suite.json", &SuiteReport { scenario: cfg.suite.scenario, pass, checks: &checks })?;
    Ok(pass)
}
