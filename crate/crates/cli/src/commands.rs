//! `verify`, `solve-wave`, `simulate` and `char-scan`.

use delaywave::box_solver::{grow_box, solve_wave, BoxGrowth, GrowthStep};
use delaywave::characteristic::{
    count_roots_strip, kappa_h_mu, oscillation_certificate, scan, tau_epsilon_scan, CharParams, Certificate,
    KappaResult,
};
use delaywave::nonlinearity::{verify_bistable, verify_oscillatory, AssumptionReport};
use delaywave::numeric::LineFit;
use delaywave::simulator::SimulationRun;
use delaywave::wave_analysis::{diagnose, periodicity, PeriodEstimate, TailClass, WaveDiagnostics};
use delaywave::{exec, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{num, opt, OutDir};

fn report_line(name: &str, r: &AssumptionReport) {
    if r.pass {
        println!("{name}: PASS");
    } else {
        println!("{name}: FAIL ({})", r.failed().join(", "));
    }
}

/// Returns whether every requested assumption holds.
pub fn verify(cfg: &ExperimentConfig, out: &OutDir) -> Result<bool> {
    let model = cfg.model_spec()?.build()?;
    let bistable = verify_bistable(&model, cfg.verify.tol);
    out.json("bistable.json", &bistable)?;
    report_line("bistable", &bistable);
    let mut pass = bistable.pass;
    if cfg.verify.oscillatory.unwrap_or(model.landmarks().is_some()) {
        match verify_oscillatory(&model, cfg.verify.tol) {
            Ok(r) => {
                out.json("oscillatory.json", &r)?;
                report_line("oscillatory", &r);
                pass &= r.pass;
            }
            Err(e @ Error::NoPeak { .. }) => {
                out.json("oscillatory.json", &serde_json::json!({ "pass": false, "error": e.to_string() }))?;
                println!("oscillatory: FAIL ({e})");
                pass = false;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(pass)
}

#[derive(Serialize)]
struct WaveSummary<'a> {
    c: f64,
    tau: f64,
    sigma: f64,
    a: f64,
    n: usize,
    newton_iters: usize,
    residual_norm: f64,
    growth_converged: Option<bool>,
    growth_non_cauchy: Option<bool>,
    certificate: Option<&'a Certificate>,
    diagnostics: &'a WaveDiagnostics,
}

fn write_growth(out: &OutDir, g: &BoxGrowth) -> Result<()> {
    out.csv(
        "growth.csv",
        &["a", "profile_delta", "speed_delta"],
        g.steps.iter().map(|GrowthStep { a, profile_delta, speed_delta }| vec![num(*a), num(*profile_delta), num(*speed_delta)]),
    )
}

/// Full wave pipeline. Numerical failures surface as errors; the
/// diagnostics themselves never fail the command.
pub fn solve_wave_cmd(cfg: &ExperimentConfig, out: &OutDir) -> Result<bool> {
    let f = cfg.model_spec()?.build()?;
    let scfg = cfg.solver.clone().unwrap_or_default();
    let (mut sol, trace) = solve_wave(&f, cfg.tau, scfg.grid()?, &scfg)?;
    trace.write_csv(&out.path("continuation.csv"))?;
    let mut growth = None;
    if let Some(g) = &cfg.growth {
        let grown = grow_box(&f, cfg.tau, &g.a_schedule, &sol, g.right_window, &scfg)?;
        write_growth(out, &grown)?;
        sol = grown.last().clone();
        growth = Some((grown.converged, grown.non_cauchy));
    }
    sol.profile.write_csv(&out.path("profile.csv"))?;
    let (diag, sc) = diagnose(&sol, &f, &cfg.analysis)?;
    sc.write_csv(&out.path("sc_history.csv"))?;
    if let Some(p) = &diag.period {
        p.write_csv(&out.path("troughs.csv"))?;
    }
    let certificate = if diag.tail.class == TailClass::Oscillating && f.mu1() < 0.0 {
        Some(oscillation_certificate(&f, sol.c, sol.tau)?)
    } else {
        None
    };
    let summary = WaveSummary {
        c: sol.c,
        tau: sol.tau,
        sigma: sol.sigma,
        a: sol.a,
        n: sol.grid().n(),
        newton_iters: sol.newton_iters,
        residual_norm: sol.residual_norm,
        growth_converged: growth.map(|g| g.0),
        growth_non_cauchy: growth.map(|g| g.1),
        certificate: certificate.as_ref(),
        diagnostics: &diag,
    };
    out.json("diagnostics.json", &summary)?;
    println!("c = {}  tail {:?}  sup|U-1| = {:e}", num(sol.c), diag.tail.class, diag.tail.sup_deviation);
    let violations = diag.invariants.violations();
    if !violations.is_empty() {
        println!("invariant violations: {}", violations.join(", "));
    }
    if let Some(c) = &certificate {
        println!("certificate: {:?}", c.verdict);
    }
    for w in &diag.warnings {
        log::warn!("{w}");
    }
    Ok(true)
}

#[derive(Serialize)]
struct ProbePeriod {
    x: f64,
    estimate: Option<PeriodEstimate>,
}

#[derive(Serialize)]
struct SimulationFits {
    dt: f64,
    steps_per_delay: usize,
    t_end: f64,
    a_final: f64,
    front_speed: Option<LineFit>,
    frame_speed: Option<f64>,
    probe_periods: Vec<ProbePeriod>,
    warnings: Vec<String>,
}

pub fn simulate(cfg: &ExperimentConfig, out: &OutDir) -> Result<bool> {
    let f = cfg.model_spec()?.build()?;
    let sim = cfg.simulation.clone().unwrap_or_default();
    if sim.frame.is_some() && sim.numerics.snapshot_every == 0 {
        return Err(CliError::Config("simulation.frame needs simulation.numerics.snapshot_every > 0".into()));
    }
    let mut run = SimulationRun::new(&f, cfg.tau, sim.shift, &sim.initial, sim.history, &sim.numerics)?;
    if let Some(p) = &sim.probes {
        run.set_probes(p.xs.clone(), p.every);
    }
    run.run_until(sim.numerics.horizon)?;
    let fit = run.fitted_speed();

    out.csv("track.csv", &["t", "x_front"], run.front_track.iter().map(|&(t, x)| vec![num(t), num(x)]))?;
    if sim.numerics.snapshot_every > 0 {
        run.write_snapshots_csv(&out.path("snapshots.csv"), sim.snapshot_stride)?;
    }

    let mut frame_speed = None;
    if let Some(fr) = &sim.frame {
        let c = match (fr.speed, &fit) {
            (Some(c), _) => c,
            (None, Some(l)) => l.slope,
            (None, None) => return Err(Error::NoCrossing { level: f.theta(), t: run.t() }.into()),
        };
        let &(t_last, x_last) = run.front_track.last().expect("fit implies a track");
        let anchor = x_last + c * t_last;
        let offsets = fr.offsets.values();
        let xis: Vec<f64> = offsets.iter().map(|o| anchor + o).collect();
        let tail = run.moving_frame_tail(c, &xis, fr.t_min);
        out.csv(
            "frame.csv",
            &["t", "offset", "u"],
            tail.iter().flat_map(|(t, us)| offsets.iter().zip(us).map(move |(o, u)| vec![num(*t), num(*o), num(*u)])),
        )?;
        frame_speed = Some(c);
    }

    let mut probe_periods = Vec::new();
    if let Some(p) = &sim.probes {
        out.csv(
            "probes.csv",
            &["t", "x", "u"],
            run.probe_series
                .iter()
                .flat_map(|(t, us)| p.xs.iter().zip(us).map(move |(x, u)| vec![num(*t), num(*x), num(*u)])),
        )?;
        for (k, &x) in p.xs.iter().enumerate() {
            let z: Vec<f64> = run.probe_series.iter().filter(|s| s.0 >= p.t_min).map(|s| s.1[k]).collect();
            let estimate = periodicity(&z, p.every as f64 * run.dt());
            probe_periods.push(ProbePeriod { x, estimate });
        }
    }

    let fits = SimulationFits {
        dt: run.dt(),
        steps_per_delay: run.history().m(),
        t_end: run.t(),
        a_final: run.a(),
        front_speed: fit,
        frame_speed,
        probe_periods,
        warnings: run.warnings.clone(),
    };
    out.json("fits.json", &fits)?;
    match &fits.front_speed {
        Some(l) => println!("front speed {} (R^2 {})", num(l.slope), num(l.r_squared)),
        None => println!("front speed unavailable: track too short"),
    }
    for w in &fits.warnings {
        log::warn!("{w}");
    }
    Ok(true)
}

#[derive(Serialize)]
struct TauEpsilon {
    mu: f64,
    eps: f64,
    tau_epsilon: Option<f64>,
}

pub fn char_scan(cfg: &ExperimentConfig, out: &OutDir) -> Result<bool> {
    let ch = &cfg.characteristic;
    let rows = scan(&ch.mus, &ch.hs, &ch.taus)?;
    out.csv(
        "scan.csv",
        &["mu", "h", "tau", "count", "kappa_mu", "h_mu"],
        rows.iter()
            .map(|r| vec![num(r.mu), num(r.h), num(r.tau), r.count.to_string(), opt(r.kappa_mu), opt(r.h_mu)]),
    )?;

    let kappas: Vec<(f64, Option<KappaResult>)> = ch.mus.iter().map(|&m| (m, kappa_h_mu(m).ok())).collect();
    out.csv(
        "kappa.csv",
        &["mu", "kappa_mu", "h_mu", "argmin_re", "argmin_im", "grid_step"],
        kappas.iter().filter_map(|(m, k)| {
            k.map(|k| {
                vec![num(*m), num(k.kappa_mu), num(k.h_mu), num(k.argmin_re), num(k.argmin_im), num(k.grid_step)]
            })
        }),
    )?;

    if let Some(te) = &ch.tau_epsilon {
        let (found, tried) = tau_epsilon_scan(te.mu, te.eps, te.tau0, te.factor, te.cap)?;
        out.csv("tau_epsilon.csv", &["tau", "count"], tried.iter().map(|(t, c)| vec![num(*t), c.to_string()]))?;
        out.json("tau_epsilon.json", &TauEpsilon { mu: te.mu, eps: te.eps, tau_epsilon: found })?;
        match found {
            Some(t) => println!("tau_eps(mu = {}, eps = {}) <= {}", num(te.mu), num(te.eps), num(t)),
            None => println!("strip not empty up to tau = {}", num(te.cap)),
        }
    }

    if let Some(r) = &ch.random {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let triples: Vec<(f64, f64, f64)> = (0..r.count)
            .map(|_| (rng.gen_range(r.mu.0..r.mu.1), rng.gen_range(r.h.0..r.h.1), rng.gen_range(r.tau.0..r.tau.1)))
            .collect();
        let reports = exec::map(&triples, |&(mu, h, tau)| count_roots_strip(&CharParams::new(mu, h, tau)?));
        let mut table = Vec::with_capacity(reports.len());
        for ((mu, h, tau), rep) in triples.iter().zip(reports) {
            let rep = rep?;
            table.push(vec![
                num(*mu),
                num(*h),
                num(*tau),
                rep.winding_count.to_string(),
                rep.multiplicity_sum().to_string(),
                rep.max_per_vertical_line().to_string(),
            ]);
        }
        out.csv("random.csv", &["mu", "h", "tau", "count", "multiplicity_sum", "max_per_line"], table)?;
    }
    println!("{} scan rows", rows.len());
    Ok(true)
}

