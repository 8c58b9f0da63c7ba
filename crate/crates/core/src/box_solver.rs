//! Newton solver for the box problem with unknown speed, σ-continuation from
//! the local problem to the delayed one, and box growth.
//!
//! Unknowns are the interior node values and the speed `c`. The residual is
//! the finite-difference operator of [`crate::discretization`] plus the phase
//! condition `ū(0) = θ`. The Jacobian is banded (tridiagonal plus the
//! two-node interpolation stencil of the shift `s = σ c τ`), bordered by the
//! dense `∂/∂c` column and the phase row; it is solved by banded LU and
//! block elimination.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{
    first_difference, residual_values, sample_values, Advection, Grid, Profile, Stencil,
};
use crate::error::{Error, Result};
use crate::nonlinearity::{NonlinearityModel, Reaction};
use crate::numeric::BandMatrix;

/// Solver settings; the `solver` section of experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub a: f64,
    pub n: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub box_convergence_tol: f64,
    pub c0: f64,
    pub advection: Advection,
    /// Retry the local solve with upwind differences if Newton fails.
    pub upwind_fallback: bool,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub step_growth: f64,
    /// Newton iteration count at or below which a step counts as fast.
    pub fast_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a: 30.0,
            n: 3001,
            tol: 1e-10,
            max_iters: 50,
            max_halvings: 20,
            box_convergence_tol: 1e-6,
            c0: 0.1,
            advection: Advection::Centered,
            upwind_fallback: true,
            initial_step: 0.1,
            max_step: 0.1,
            min_step: 1e-6,
            step_growth: 1.5,
            fast_iters: 4,
        }
    }
}

impl SolverConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.a, self.n)
    }
}

/// A converged (or last-iterate) solution of the box problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSolution {
    pub profile: Profile,
    pub c: f64,
    pub sigma: f64,
    pub tau: f64,
    pub a: f64,
    pub newton_iters: usize,
    pub residual_norm: f64,
    pub advection: Advection,
    /// Translation `d` such that `ū(· + d)` satisfies `max_[-a,0] = θ/2`.
    pub normalization_shift: f64,
    /// `max_[-a, d] ū - θ/2` on the nodes; a diagnostic, not imposed.
    pub normalization_defect: f64,
}

impl BoxSolution {
    pub fn grid(&self) -> &Grid {
        self.profile.grid()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub sigma: f64,
    pub c: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Step that led to this point (`0` for the start).
    pub step: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub steps: Vec<TraceStep>,
    /// `(sigma_attempted, step)` for every rejected step.
    pub rejected: Vec<(f64, f64)>,
    /// σ values where the corrector landed far from the predicted speed.
    pub branch_jumps: Vec<f64>,
}

impl ContinuationTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.steps {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closed form of the linear box problem `-u'' + c u' = 0`, `u(-a) = 0`,
/// `u(a) = 1`, evaluated without overflow for any `c a`.
pub fn linear_reference_value(c: f64, a: f64, x: f64) -> f64 {
    if c == 0.0 {
        return (x + a) / (2.0 * a);
    }
    if c.abs() * a <= 300.0 {
        let num = (c * x).exp() - (-c * a).exp();
        let den = (c * a).exp() - (-c * a).exp();
        return num / den;
    }
    if c > 0.0 {
        (c * (x - a)).exp() * (-c * (x + a)).exp_m1() / (-2.0 * c * a).exp_m1()
    } else {
        let b = -c;
        (-b * (x + a)).exp_m1() / (-2.0 * b * a).exp_m1()
    }
}

pub fn solve_linear_reference(c: f64, grid: Grid) -> Profile {
    let a = grid.a();
    Profile::from_fn(grid, |x| linear_reference_value(c, a, x))
}

/// Smooth front with `u(0) = θ`, rescaled to the pins.
pub fn initial_guess(grid: Grid, theta: f64) -> Profile {
    let x0 = -2.0 * (2.0 * theta - 1.0).atanh();
    let a = grid.a();
    let raw = |x: f64| 0.5 * (1.0 + ((x - x0) / 2.0).tanh());
    let (l, r) = (raw(-a), raw(a));
    Profile::from_fn(grid, |x| (raw(x) - l) / (r - l))
}

/// The discrete nonlinear system for fixed `(τ, σ)`.
struct System<'a, R: Reaction + ?Sized> {
    f: &'a R,
    grid: Grid,
    tau: f64,
    sigma: f64,
    /// Phase level; `None` freezes `c`.
    theta: Option<f64>,
    advection: Advection,
}

impl<R: Reaction + ?Sized> System<'_, R> {
    fn shift(&self, c: f64) -> f64 {
        self.sigma * c * self.tau
    }

    fn residual(&self, u: &[f64], c: f64) -> Vec<f64> {
        let mut r = residual_values(&self.grid, u, c, self.shift(c), self.f, self.advection);
        if let Some(theta) = self.theta {
            r.push(sample_values(&self.grid, u, 0.0) - theta);
        }
        r
    }

    /// One Newton direction `-J⁻¹ F` for the full unknown vector.
    fn direction(&self, u: &[f64], c: f64, res: &[f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        let n = g.n();
        let dx = g.dx();
        let inv_dx2 = 1.0 / (dx * dx);
        let s = self.shift(c);
        let reach = (s.abs() / dx).floor() as usize + 2;
        let (lower, upper) = if s > 0.0 { (reach.min(n - 1), 1) } else if s < 0.0 { (1, reach.min(n - 1)) } else { (1, 1) };
        let mut a = BandMatrix::zeros(n, lower, upper);
        let mut dc = vec![0.0; n];
        for i in 1..=n {
            let row = i - 1;
            a.add(row, row, 2.0 * inv_dx2 + 1.0);
            match self.advection {
                Advection::Centered => {
                    if i > 1 {
                        a.add(row, row - 1, -inv_dx2 - c / (2.0 * dx));
                    }
                    if i < n {
                        a.add(row, row + 1, -inv_dx2 + c / (2.0 * dx));
                    }
                }
                Advection::Upwind => {
                    // c >= 0: c (u[i+1] - u[i]) / dx; c < 0: c (u[i] - u[i-1]) / dx
                    let (left, right) = if c >= 0.0 { (0.0, c / dx) } else { (-c / dx, 0.0) };
                    a.add(row, row, -(left + right));
                    if i > 1 {
                        a.add(row, row - 1, -inv_dx2 + left);
                    }
                    if i < n {
                        a.add(row, row + 1, -inv_dx2 + right);
                    }
                }
            }
            dc[row] = first_difference(u, i, dx, c, self.advection);
            if s == 0.0 {
                a.add(row, row, -self.f.df(u[i]));
                continue;
            }
            if let Stencil::Cell(j, w) = g.locate(g.x(i) - s) {
                let ubar = if w == 0.0 { u[j] } else { (1.0 - w) * u[j] + w * u[j + 1] };
                let fp = self.f.df(ubar);
                if (1..=n).contains(&j) {
                    a.add(row, j - 1, -fp * (1.0 - w));
                }
                if w > 0.0 && (1..=n).contains(&(j + 1)) {
                    a.add(row, j, -fp * w);
                }
                let slope = (u[j + 1] - u[j]) / dx;
                dc[row] += fp * self.sigma * self.tau * slope;
            }
        }
        let lu = a.factor()?;
        let y = lu.solve(&res[..n]);
        let Some(_) = self.theta else {
            return Ok(y.into_iter().map(|v| -v).collect());
        };
        let w = lu.solve(&dc);
        // phase row weights
        let mut phase = Vec::with_capacity(2);
        if let Stencil::Cell(j, wt) = g.locate(0.0) {
            if (1..=n).contains(&j) {
                phase.push((j - 1, 1.0 - wt));
            }
            if wt > 0.0 && (1..=n).contains(&(j + 1)) {
                phase.push((j, wt));
            }
        }
        let ry: f64 = phase.iter().map(|&(k, v)| v * y[k]).sum();
        let rw: f64 = phase.iter().map(|&(k, v)| v * w[k]).sum();
        if rw == 0.0 {
            return Err(Error::SingularPivot { row: n });
        }
        let q = res[n];
        let delta_c = (ry - q) / (-rw);
        let mut out: Vec<f64> = y.iter().zip(&w).map(|(yi, wi)| -yi - wi * delta_c).collect();
        out.push(delta_c);
        Ok(out)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct NewtonOutcome {
    values: Vec<f64>,
    c: f64,
    iters: usize,
    residual: f64,
    converged: bool,
}

fn newton<R: Reaction + ?Sized>(
    sys: &System<'_, R>,
    mut u: Vec<f64>,
    mut c: f64,
    cfg: &SolverConfig,
) -> Result<NewtonOutcome> {
    let n = sys.grid.n();
    let mut res = sys.residual(&u, c);
    let mut norm = sup_norm(&res);
    let mut iters = 0;
    while norm > cfg.tol && iters < cfg.max_iters {
        let dir = sys.direction(&u, c, &res)?;
        let merit = l2_norm(&res);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = u.clone();
            for i in 0..n {
                trial[i + 1] += lambda * dir[i];
            }
            let tc = if sys.theta.is_some() { c + lambda * dir[n] } else { c };
            let tres = sys.residual(&trial, tc);
            let tm = l2_norm(&tres);
            if tm.is_finite() && tm <= (1.0 - 1e-4 * lambda) * merit {
                accepted = Some((trial, tc, tres));
                break;
            }
            lambda *= 0.5;
        }
        iters += 1;
        match accepted {
            Some((nu, nc, nres)) => {
                u = nu;
                c = nc;
                res = nres;
                norm = sup_norm(&res);
            }
            None => break,
        }
    }
    Ok(NewtonOutcome { values: u, c, iters, residual: norm, converged: norm <= cfg.tol })
}

fn normalization(profile: &Profile, theta: f64) -> (f64, f64) {
    let g = profile.grid();
    let u = profile.values();
    let half = 0.5 * theta;
    let Some(i) = (0..=g.n()).find(|&i| u[i] < half && u[i + 1] >= half) else {
        return (f64::NAN, f64::NAN);
    };
    let d = g.x(i) + g.dx() * (half - u[i]) / (u[i + 1] - u[i]);
    let defect = (0..g.n() + 2)
        .filter(|&k| g.x(k) <= d)
        .map(|k| u[k])
        .fold(0.0, f64::max)
        - half;
    (d, defect)
}

/// Newton solve of the box problem at `(τ, σ)` from the given iterate.
pub fn solve_box(
    f: &NonlinearityModel,
    tau: f64,
    sigma: f64,
    init: &Profile,
    c_init: f64,
    cfg: &SolverConfig,
) -> Result<BoxSolution> {
    solve_box_with(f, tau, sigma, init, c_init, cfg, cfg.advection)
}

fn solve_box_with(
    f: &NonlinearityModel,
    tau: f64,
    sigma: f64,
    init: &Profile,
    c_init: f64,
    cfg: &SolverConfig,
    advection: Advection,
) -> Result<BoxSolution> {
    if !(tau >= 0.0) || !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!(
            "need tau >= 0 and sigma in [0, 1] (tau = {tau}, sigma = {sigma})"
        )));
    }
    let grid = *init.grid();
    let sys = System { f, grid, tau, sigma, theta: Some(f.theta()), advection };
    let out = newton(&sys, init.values().to_vec(), c_init, cfg)?;
    let profile = Profile::new(grid, out.values)?;
    let (normalization_shift, normalization_defect) = normalization(&profile, f.theta());
    let sol = BoxSolution {
        profile,
        c: out.c,
        sigma,
        tau,
        a: grid.a(),
        newton_iters: out.iters,
        residual_norm: out.residual,
        advection,
        normalization_shift,
        normalization_defect,
    };
    if out.converged {
        Ok(sol)
    } else {
        Err(Error::NewtonDiverged { iters: out.iters, residual: out.residual, last: Box::new(sol) })
    }
}

/// Solve `-u'' + c u' = f(u) - u` (σ = 0) with `u(0) = θ`. Starts from the
/// tanh guess when `init` is `None`.
pub fn solve_local(
    f: &NonlinearityModel,
    grid: Grid,
    init: Option<&Profile>,
    cfg: &SolverConfig,
) -> Result<BoxSolution> {
    let guess = init.cloned().unwrap_or_else(|| initial_guess(grid, f.theta()));
    let guess = if guess.grid() == &grid { guess } else { guess.resample(grid) };
    match solve_box_with(f, 0.0, 0.0, &guess, cfg.c0, cfg, cfg.advection) {
        Err(Error::NewtonDiverged { .. })
            if cfg.upwind_fallback && cfg.advection == Advection::Centered =>
        {
            log::warn!("centered Newton failed on the local problem; retrying with upwind differences");
            solve_box_with(f, 0.0, 0.0, &guess, cfg.c0, cfg, Advection::Upwind)
        }
        other => other,
    }
}

/// Solve with `c` frozen and no phase condition, e.g. the linear reference
/// problem with [`crate::nonlinearity::Identity`].
pub fn solve_fixed_speed<R: Reaction + ?Sized>(
    f: &R,
    grid: Grid,
    c: f64,
    tau: f64,
    cfg: &SolverConfig,
) -> Result<Profile> {
    let sys = System { f, grid, tau, sigma: 1.0, theta: None, advection: cfg.advection };
    let init = Profile::from_fn(grid, |x| (x + grid.a()) / (2.0 * grid.a()));
    let out = newton(&sys, init.values().to_vec(), c, cfg)?;
    if !out.converged {
        return Err(Error::NewtonDiverged {
            iters: out.iters,
            residual: out.residual,
            last: Box::new(BoxSolution {
                profile: Profile::new(grid, out.values)?,
                c,
                sigma: 1.0,
                tau,
                a: grid.a(),
                newton_iters: out.iters,
                residual_norm: out.residual,
                advection: cfg.advection,
                normalization_shift: f64::NAN,
                normalization_defect: f64::NAN,
            }),
        });
    }
    Profile::new(grid, out.values)
}

/// Continue a σ = 0 solution to σ = 1 at delay `tau`.
pub fn continue_sigma(
    f: &NonlinearityModel,
    tau: f64,
    from: &BoxSolution,
    cfg: &SolverConfig,
) -> Result<(BoxSolution, ContinuationTrace)> {
    if from.sigma != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "continuation starts at sigma = 0, got {}",
            from.sigma
        )));
    }
    let mut trace = ContinuationTrace::default();
    trace.steps.push(TraceStep {
        sigma: 0.0,
        c: from.c,
        residual_norm: from.residual_norm,
        newton_iters: from.newton_iters,
        step: 0.0,
    });
    let mut cur = from.clone();
    cur.tau = tau;
    let mut prev: Option<BoxSolution> = None;
    let mut step = cfg.initial_step.min(cfg.max_step);
    while cur.sigma < 1.0 {
        let target = (cur.sigma + step).min(1.0);
        let (guess, c_guess) = predict(&cur, prev.as_ref(), target);
        let attempt = solve_box_with(f, tau, target, &guess, c_guess, cfg, cur.advection);
        match attempt {
            Ok(next) if next.c > 0.0 => {
                let jump = (next.c - c_guess).abs();
                if jump > 1e-3 + 0.25 * c_guess.abs() {
                    log::warn!(
                        "corrector speed {} far from predicted {} at sigma = {}: possible branch switch",
                        next.c,
                        c_guess,
                        target
                    );
                    trace.branch_jumps.push(target);
                }
                trace.steps.push(TraceStep {
                    sigma: target,
                    c: next.c,
                    residual_norm: next.residual_norm,
                    newton_iters: next.newton_iters,
                    step: target - cur.sigma,
                });
                if next.newton_iters <= cfg.fast_iters {
                    step = (step * cfg.step_growth).min(cfg.max_step);
                }
                prev = Some(std::mem::replace(&mut cur, next));
            }
            other => {
                trace.rejected.push((target, step));
                step *= 0.5;
                if step < cfg.min_step {
                    return Err(match other {
                        Ok(bad) => Error::SpeedSignLoss { sigma: target, c: bad.c },
                        Err(_) => Error::ContinuationStalled { sigma: cur.sigma, min_step: cfg.min_step },
                    });
                }
            }
        }
    }
    Ok((cur, trace))
}

/// Secant predictor in σ.
fn predict(cur: &BoxSolution, prev: Option<&BoxSolution>, target: f64) -> (Profile, f64) {
    let Some(prev) = prev else {
        return (cur.profile.clone(), cur.c);
    };
    let ds = cur.sigma - prev.sigma;
    if ds <= 0.0 {
        return (cur.profile.clone(), cur.c);
    }
    let r = (target - cur.sigma) / ds;
    let vals: Vec<f64> = cur
        .profile
        .values()
        .iter()
        .zip(prev.profile.values())
        .map(|(a, b)| a + r * (a - b))
        .collect();
    let profile = Profile::new(*cur.profile.grid(), vals).unwrap_or_else(|_| cur.profile.clone());
    (profile, cur.c + r * (cur.c - prev.c))
}

/// Local solve followed by σ-continuation.
pub fn solve_wave(
    f: &NonlinearityModel,
    tau: f64,
    grid: Grid,
    cfg: &SolverConfig,
) -> Result<(BoxSolution, ContinuationTrace)> {
    let local = solve_local(f, grid, None, cfg)?;
    continue_sigma(f, tau, &local, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthStep {
    pub a: f64,
    pub profile_delta: f64,
    pub speed_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrowth {
    pub solutions: Vec<BoxSolution>,
    pub steps: Vec<GrowthStep>,
    /// Both deltas fell below `box_convergence_tol`.
    pub converged: bool,
    /// Deltas increased for three consecutive boxes.
    pub non_cauchy: bool,
}

impl BoxGrowth {
    pub fn last(&self) -> &BoxSolution {
        self.solutions.last().expect("growth holds the seed")
    }
}

/// Re-solve on larger boxes with the same spacing, warm-started from the
/// previous profile extended by its boundary constants. Profile deltas are
/// measured on `[-a_prev, min(a_prev, right_window)]`.
pub fn grow_box(
    f: &NonlinearityModel,
    tau: f64,
    a_schedule: &[f64],
    seed: &BoxSolution,
    right_window: Option<f64>,
    cfg: &SolverConfig,
) -> Result<BoxGrowth> {
    let mut out = BoxGrowth { solutions: vec![seed.clone()], steps: Vec::new(), converged: false, non_cauchy: false };
    let dx = seed.grid().dx();
    let mut increases = 0;
    let mut last_delta = f64::INFINITY;
    for &a in a_schedule.iter().filter(|&&a| a > seed.a + 0.5 * dx) {
        let prev = out.last().clone();
        let grid = Grid::with_spacing(a, dx)?;
        let warm = prev.profile.resample(grid);
        let next = match solve_box(f, tau, 1.0, &warm, prev.c, cfg) {
            Ok(s) => s,
            Err(Error::NewtonDiverged { .. }) => {
                log::info!("warm start failed at a = {a}; re-running the homotopy");
                let local = solve_local(f, grid, Some(&warm), cfg)?;
                continue_sigma(f, tau, &local, cfg)?.0
            }
            Err(e) => return Err(e),
        };
        let hi = right_window.map_or(prev.a, |w| w.min(prev.a));
        let pg = prev.grid();
        let profile_delta = (0..pg.n() + 2)
            .map(|i| pg.x(i))
            .filter(|&x| x <= hi)
            .map(|x| (prev.profile.shifted_sample(x) - next.profile.shifted_sample(x)).abs())
            .fold(0.0, f64::max);
        let speed_delta = (next.c - prev.c).abs();
        out.steps.push(GrowthStep { a: next.a, profile_delta, speed_delta });
        out.solutions.push(next);
        let delta = profile_delta.max(speed_delta);
        if delta > last_delta {
            increases += 1;
            if increases >= 3 {
                out.non_cauchy = true;
            }
        } else {
            increases = 0;
        }
        last_delta = delta;
        if profile_delta < cfg.box_convergence_tol && speed_delta < cfg.box_convergence_tol {
            out.converged = true;
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Identity;
    use approx::assert_abs_diff_eq;

    fn cubic(theta: f64) -> NonlinearityModel {
        NonlinearityModel::cubic_shift(2.0, theta).unwrap()
    }

    fn cfg(a: f64, n: usize) -> SolverConfig {
        SolverConfig { a, n, ..SolverConfig::default() }
    }

    #[test]
    fn linear_reference_values() {
        assert_abs_diff_eq!(linear_reference_value(0.0, 10.0, 0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_reference_value(1.0, 5.0, 0.0), 0.006692850924284856, epsilon = 1e-12);
        for c in [-400.0, -2.0, 0.0, 0.7, 40.0, 400.0] {
            assert_abs_diff_eq!(linear_reference_value(c, 5.0, 5.0), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(linear_reference_value(c, 5.0, -5.0), 0.0, epsilon = 1e-12);
            assert!(linear_reference_value(c, 5.0, 1.3).is_finite());
        }
        // both branches agree where they overlap
        let direct = linear_reference_value(1.0, 299.0, 298.0);
        let stable = (1.0f64 * (298.0 - 299.0)).exp() * (-(298.0 + 299.0f64)).exp_m1() / (-598.0f64).exp_m1();
        assert_abs_diff_eq!(direct, stable, epsilon = 1e-12);
    }

    #[test]
    fn fixed_speed_solver_matches_discrete_closed_form() {
        // the centered scheme is solved exactly by u_i = (ρ^i - 1)/(ρ^(n+1) - 1)
        let grid = Grid::new(10.0, 2001).unwrap();
        let c = cfg(10.0, 2001);
        for speed in [0.0, 0.5, 1.0] {
            let p = solve_fixed_speed(&Identity, grid, speed, 0.0, &c).unwrap();
            let m = (grid.n() + 1) as i32;
            let exact = |i: usize| {
                if speed == 0.0 {
                    i as f64 / m as f64
                } else {
                    let h = 0.5 * speed * grid.dx();
                    let rho: f64 = (1.0 + h) / (1.0 - h);
                    (rho.powi(i as i32) - 1.0) / (rho.powi(m) - 1.0)
                }
            };
            let err = p.values().iter().enumerate().map(|(i, v)| (v - exact(i)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "c = {speed}: {err}");
            let r = solve_linear_reference(speed, grid);
            let cont = p.values().iter().zip(r.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            // modified speed c(1 + (c dx)^2 / 12) bounds the continuum error
            let bound = speed.powi(2) * grid.dx().powi(2) / 12.0 / std::f64::consts::E * 1.1;
            assert!(cont <= bound + 1e-12, "c = {speed}: {cont} vs {bound}");
        }
    }

    #[test]
    fn local_cubic_speed_matches_closed_form() {
        let f = cubic(0.25);
        let c = cfg(20.0, 1599);
        let sol = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        assert!(sol.residual_norm < 1e-10);
        assert_abs_diff_eq!(sol.profile.shifted_sample(0.0), 0.25, epsilon = 1e-10);
        // c = sqrt(k/2)(1 - 2θ)
        assert!((sol.c - 0.5).abs() < 2e-3, "c = {}", sol.c);
        assert!(sol.normalization_shift < 0.0 && sol.normalization_defect.abs() < 0.01);
    }

    #[test]
    fn converged_init_takes_no_steps() {
        let f = cubic(0.25);
        let c = cfg(15.0, 599);
        let sol = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        let again = solve_box(&f, 0.0, 0.0, &sol.profile, sol.c, &c).unwrap();
        assert!(again.newton_iters <= 1);
        assert_abs_diff_eq!(again.c, sol.c, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_cubic_has_zero_speed() {
        let f = cubic(0.5);
        let c = cfg(20.0, 799);
        let sol = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        assert!(sol.c.abs() < 1e-3, "c = {}", sol.c);
    }

    #[test]
    fn zero_delay_continuation_is_identity() {
        let f = cubic(0.25);
        let c = cfg(15.0, 599);
        let local = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        let (end, trace) = continue_sigma(&f, 0.0, &local, &c).unwrap();
        assert_eq!(end.sigma, 1.0);
        assert!((end.c - local.c).abs() < 1e-10);
        assert!(trace.steps.windows(2).all(|w| w[1].sigma > w[0].sigma));
    }

    #[test]
    fn small_delay_continuation_stays_in_speed_bounds() {
        let f = cubic(0.25);
        let c = cfg(20.0, 799);
        let local = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        let (end, trace) = continue_sigma(&f, 0.3, &local, &c).unwrap();
        let kmax = crate::nonlinearity::linear_bound_k(&f).k + 1.0;
        assert!(end.c > 0.0 && end.c < kmax);
        assert!(end.residual_norm < 1e-10);
        assert_eq!(trace.steps.last().unwrap().sigma, 1.0);
        // the delay slows the front down
        assert!(end.c < local.c);
    }

    #[test]
    fn continuation_rejects_nonzero_start() {
        let f = cubic(0.25);
        let c = cfg(10.0, 199);
        let mut local = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        local.sigma = 0.5;
        assert!(continue_sigma(&f, 0.1, &local, &c).is_err());
    }

    #[test]
    fn grow_box_seed_only_is_noop() {
        let f = cubic(0.25);
        let c = cfg(10.0, 399);
        let seed = solve_local(&f, c.grid().unwrap(), None, &c).unwrap();
        let g = grow_box(&f, 0.0, &[10.0], &seed, None, &c).unwrap();
        assert_eq!(g.solutions.len(), 1);
        assert!(g.steps.is_empty());
    }
}
