//! Method-of-lines integrator for `u_t = u_xx + f(u(t - τ, x - h)) - u` on a
//! large interval with reflecting ends.
//!
//! Diffusion is Crank–Nicolson, the reaction is explicit and read from a
//! ring of past states. `dt = τ/m` exactly, so delayed lookups never
//! interpolate in time. With `τ = 0, h > 0` this is the monotone shifted
//! problem; with `h = 0` the delayed equation.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::nonlinearity::NonlinearityModel;
use crate::numeric::{bisect, fit_line, LineFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Half-width of the domain.
    pub a: f64,
    pub dx: f64,
    /// Minimum number of steps per delay.
    pub m_min: usize,
    /// Step used when there is no delay.
    pub dt_free: f64,
    /// Bound on `dt (1 + sup|f'|)`.
    pub reaction_cfl: f64,
    /// Bound on `dt / dx²`; `1` keeps the discrete maximum principle.
    pub diffusion_ratio: f64,
    pub horizon: f64,
    /// Record the front every this many steps.
    pub track_every: usize,
    /// Keep a full snapshot every this many steps (`0` disables).
    pub snapshot_every: usize,
    pub enlarge_margin: f64,
    pub enlarge_by: f64,
    pub max_a: f64,
    pub blowup_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            a: 200.0,
            dx: 0.1,
            m_min: 50,
            dt_free: 0.05,
            reaction_cfl: 0.5,
            diffusion_ratio: 1.0,
            horizon: 300.0,
            track_every: 10,
            snapshot_every: 0,
            enlarge_margin: 20.0,
            enlarge_by: 100.0,
            max_a: 5000.0,
            blowup_factor: 10.0,
        }
    }
}

/// Initial datum on the lab axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    /// `0` left of `at`, `1` right of it.
    Step { at: f64 },
    /// Piecewise linear through `(xs, us)`, constant beyond the ends.
    Table { xs: Vec<f64>, us: Vec<f64> },
}

impl InitialDatum {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialDatum::Step { at } => {
                if x < *at {
                    0.0
                } else {
                    1.0
                }
            }
            InitialDatum::Table { xs, us } => interp_clamped(xs, us, x),
        }
    }
}

fn interp_clamped(xs: &[f64], us: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return us[0];
    }
    if x >= xs[n - 1] {
        return us[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    (1.0 - w) * us[k] + w * us[k + 1]
}

/// History on `[-τ, 0]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialHistory {
    /// `u(s, x) = u₀(x)`.
    #[default]
    Constant,
    /// `u(s, x) = u₀(x + c s)`: the history of a front moving left at speed `c`.
    Travelling { c: f64 },
}

/// Ring of the last `m + 1` states: `frames[0]` is `u(t - τ)`, the back is `u(t)`.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    frames: VecDeque<Vec<f64>>,
    m: usize,
}

impl HistoryBuffer {
    fn new(frames: VecDeque<Vec<f64>>, m: usize) -> Self {
        debug_assert_eq!(frames.len(), m + 1);
        Self { frames, m }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn current(&self) -> &[f64] {
        self.frames.back().expect("history is never empty")
    }

    pub fn delayed(&self) -> &[f64] {
        &self.frames[0]
    }

    fn push(&mut self, state: Vec<f64>) {
        self.frames.push_back(state);
        if self.frames.len() > self.m + 1 {
            self.frames.pop_front();
        }
    }

    fn frames_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.frames.iter_mut()
    }
}

/// Constant-coefficient Crank–Nicolson system with reflecting ends,
/// factored once.
#[derive(Clone, Debug)]
struct CnFactor {
    r: f64,
    cprime: Vec<f64>,
    inv_beta: Vec<f64>,
}

impl CnFactor {
    fn new(n: usize, r: f64) -> Self {
        // (1 + r) u_i - r/2 (u_{i-1} + u_{i+1}); ghost nodes mirror the ends
        let diag = 1.0 + r;
        let off = -0.5 * r;
        let sup = |i: usize| if i == 0 { 2.0 * off } else { off };
        let sub = |i: usize| if i == n - 1 { 2.0 * off } else { off };
        let mut cprime = vec![0.0; n];
        let mut inv_beta = vec![0.0; n];
        let mut beta = diag;
        inv_beta[0] = 1.0 / beta;
        cprime[0] = sup(0) / beta;
        for i in 1..n {
            beta = diag - sub(i) * cprime[i - 1];
            inv_beta[i] = 1.0 / beta;
            cprime[i] = if i + 1 < n { sup(i) / beta } else { 0.0 };
        }
        Self { r, cprime, inv_beta }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let off = -0.5 * self.r;
        rhs[0] *= self.inv_beta[0];
        for i in 1..n {
            let sub = if i == n - 1 { 2.0 * off } else { off };
            rhs[i] = (rhs[i] - sub * rhs[i - 1]) * self.inv_beta[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.cprime[i] * rhs[i + 1];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub kappa: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub a: f64,
    pub u: Vec<f64>,
}

/// A running or finished simulation.
#[derive(Clone, Debug)]
pub struct SimulationRun<'a> {
    f: &'a NonlinearityModel,
    cfg: SimConfig,
    tau: f64,
    shift: f64,
    a: f64,
    dx: f64,
    dt: f64,
    t: f64,
    steps: usize,
    history: HistoryBuffer,
    cn: CnFactor,
    bound: f64,
    pub front_track: Vec<(f64, f64)>,
    pub snapshots: Vec<Snapshot>,
    probes: Vec<f64>,
    pub probe_series: Vec<(f64, Vec<f64>)>,
    probe_every: usize,
    pub warnings: Vec<String>,
}

/// Stable step for a delay `tau`: returns `(dt, m)` with `dt = τ/m`.
pub fn choose_step(f: &NonlinearityModel, tau: f64, cfg: &SimConfig) -> (f64, usize) {
    let lip = f.fprime_sup(0.0, f.sample_range());
    let dt_max = (cfg.reaction_cfl / (1.0 + lip)).min(cfg.diffusion_ratio * cfg.dx * cfg.dx);
    if tau == 0.0 {
        return (cfg.dt_free.min(dt_max), 0);
    }
    let m = cfg.m_min.max((tau / dt_max).ceil() as usize);
    (tau / m as f64, m)
}

impl<'a> SimulationRun<'a> {
    /// Start at `t = 0` from `init` with the given history on `[-τ, 0]`.
    pub fn new(
        f: &'a NonlinearityModel,
        tau: f64,
        shift: f64,
        init: &InitialDatum,
        history: InitialHistory,
        cfg: &SimConfig,
    ) -> Result<Self> {
        if !(tau >= 0.0) || !shift.is_finite() || !(cfg.dx > 0.0) || !(cfg.a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "simulation needs tau >= 0, finite shift, dx > 0, a > 0 (tau = {tau}, shift = {shift})"
            )));
        }
        let (dt, m) = choose_step(f, tau, cfg);
        let n = (2.0 * cfg.a / cfg.dx).round() as usize + 1;
        let dx = 2.0 * cfg.a / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -cfg.a + i as f64 * dx).collect();
        let frames: VecDeque<Vec<f64>> = (0..=m)
            .map(|k| {
                let s = -((m - k) as f64) * dt;
                let lag = match history {
                    InitialHistory::Constant => 0.0,
                    InitialHistory::Travelling { c } => c * s,
                };
                xs.iter().map(|&x| init.eval(x + lag)).collect()
            })
            .collect();
        let bound = cfg.blowup_factor * f.m_max().max(1.0);
        let mut run = Self {
            f,
            cfg: cfg.clone(),
            tau,
            shift,
            a: cfg.a,
            dx,
            dt,
            t: 0.0,
            steps: 0,
            history: HistoryBuffer::new(frames, m),
            cn: CnFactor::new(n, dt / (dx * dx)),
            bound,
            front_track: Vec::new(),
            snapshots: Vec::new(),
            probes: Vec::new(),
            probe_series: Vec::new(),
            probe_every: 1,
            warnings: Vec::new(),
        };
        run.record();
        Ok(run)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    pub fn state(&self) -> &[f64] {
        self.history.current()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.a + i as f64 * self.dx
    }

    /// Record `u(t, x)` at fixed lab points every `every` steps.
    pub fn set_probes(&mut self, xs: Vec<f64>, every: usize) {
        self.probes = xs;
        self.probe_every = every.max(1);
        self.probe_series.clear();
    }

    /// Linear interpolation of the current state, constant beyond the ends.
    pub fn sample(&self, x: f64) -> f64 {
        sample_lab(self.state(), self.a, self.dx, x)
    }

    /// Advance one step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.state().len();
        let u = self.history.current();
        let lagged = self.history.delayed();
        let r = self.dt / (self.dx * self.dx);
        let (a, dx, shift, dt) = (self.a, self.dx, self.shift, self.dt);
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i == 0 { u[1] } else { u[i - 1] };
                let right = if i == n - 1 { u[n - 2] } else { u[i + 1] };
                let lap = left - 2.0 * u[i] + right;
                let arg = if shift == 0.0 { lagged[i] } else { sample_lab(lagged, a, dx, -a + i as f64 * dx - shift) };
                u[i] + 0.5 * r * lap + dt * (self.f.eval_f(arg) - u[i])
            })
            .collect();
        self.cn.solve(&mut rhs);
        let max_abs = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.t += self.dt;
        self.steps += 1;
        if !(max_abs <= self.bound) {
            return Err(Error::BlowUp { t: self.t, max_abs });
        }
        self.history.push(rhs);
        self.record();
        Ok(())
    }

    fn record(&mut self) {
        if self.steps.is_multiple_of(self.cfg.track_every.max(1)) {
            match track_front(self.state(), self.a, self.dx, self.f.theta()) {
                Ok((x, multiple)) => {
                    if multiple && !self.warnings.iter().any(|w| w.starts_with("multiple")) {
                        self.warnings.push(format!("multiple theta crossings at t = {}; tracking the leftmost", self.t));
                    }
                    self.front_track.push((self.t, x));
                    if x < -self.a + self.cfg.enlarge_margin || x > self.a - self.cfg.enlarge_margin {
                        self.enlarge();
                    }
                }
                Err(_) => {
                    if !self.warnings.iter().any(|w| w.starts_with("no crossing")) {
                        self.warnings.push(format!("no crossing of theta at t = {}", self.t));
                    }
                }
            }
        }
        if self.cfg.snapshot_every > 0 && self.steps.is_multiple_of(self.cfg.snapshot_every) {
            self.snapshots.push(Snapshot { t: self.t, a: self.a, u: self.state().to_vec() });
        }
        if !self.probes.is_empty() && self.steps.is_multiple_of(self.probe_every) {
            let vals = self.probes.iter().map(|&x| self.sample(x)).collect();
            self.probe_series.push((self.t, vals));
        }
    }

    /// Widen the domain on both sides with the same spacing; new nodes copy
    /// the edge values of every stored frame.
    fn enlarge(&mut self) {
        let a_new = (self.a + self.cfg.enlarge_by).min(self.cfg.max_a);
        let k = ((a_new - self.a) / self.dx).round() as usize;
        if k == 0 {
            return;
        }
        for frame in self.history.frames_mut() {
            let (l, r) = (frame[0], frame[frame.len() - 1]);
            let mut grown = vec![l; k];
            grown.extend_from_slice(frame);
            grown.extend(std::iter::repeat_n(r, k));
            *frame = grown;
        }
        self.a += k as f64 * self.dx;
        let n = self.state().len();
        self.cn = CnFactor::new(n, self.dt / (self.dx * self.dx));
        log::info!("domain enlarged to a = {}", self.a);
    }

    /// Integrate until `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end - 0.5 * self.dt {
            self.step()?;
        }
        Ok(())
    }

    /// `-slope` of the front over the last half of the track: the front of
    /// `u(t, x) = U(x + c t)` moves left at speed `c`.
    pub fn fitted_speed(&self) -> Option<LineFit> {
        let n = self.front_track.len();
        if n < 4 {
            return None;
        }
        let half = &self.front_track[n / 2..];
        let ts: Vec<f64> = half.iter().map(|p| p.0).collect();
        let xs: Vec<f64> = half.iter().map(|p| p.1).collect();
        fit_line(&ts, &xs).map(|l| LineFit { slope: -l.slope, ..l })
    }

    /// Samples `u(t, ξ - c t)` at fixed frame coordinates `ξ` from the stored
    /// snapshots with `t ≥ t_min`.
    pub fn moving_frame_tail(&mut self, c: f64, xis: &[f64], t_min: f64) -> Vec<(f64, Vec<f64>)> {
        let samples: Vec<(f64, Vec<f64>)> = self
            .snapshots
            .iter()
            .filter(|s| s.t >= t_min)
            .map(|s| {
                let dx = 2.0 * s.a / (s.u.len() - 1) as f64;
                (s.t, xis.iter().map(|xi| sample_lab(&s.u, s.a, dx, xi - c * s.t)).collect())
            })
            .collect();
        let fronts: Vec<f64> = self
            .front_track
            .iter()
            .filter(|p| p.0 >= t_min)
            .map(|p| p.1 + c * p.0)
            .collect();
        if let (Some(lo), Some(hi)) = (
            fronts.iter().cloned().reduce(f64::min),
            fronts.iter().cloned().reduce(f64::max),
        ) {
            if hi - lo > 1.0 {
                self.warnings.push(format!("frame drift: theta level wanders by {} in the frame", hi - lo));
            }
        }
        samples
    }

    pub fn write_snapshots_csv(&self, path: &Path, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "x", "u"])?;
        for s in &self.snapshots {
            let dx = 2.0 * s.a / (s.u.len() - 1) as f64;
            for (i, u) in s.u.iter().enumerate().step_by(stride.max(1)) {
                w.write_record([s.t.to_string(), (-s.a + i as f64 * dx).to_string(), u.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Linear interpolation on the uniform lab grid, constant beyond the ends.
#[inline]
pub fn sample_lab(u: &[f64], a: f64, dx: f64, x: f64) -> f64 {
    let t = (x + a) / dx;
    if t <= 0.0 {
        return u[0];
    }
    let n = u.len();
    if t >= (n - 1) as f64 {
        return u[n - 1];
    }
    let i = t.floor() as usize;
    let w = t - i as f64;
    (1.0 - w) * u[i] + w * u[i + 1]
}

/// Cubic Lagrange interpolation on the lab grid (four nearest nodes).
pub fn sample_lab_cubic(u: &[f64], a: f64, dx: f64, x: f64) -> f64 {
    let n = u.len();
    let t = (x + a) / dx;
    if t <= 1.0 || t >= (n - 2) as f64 {
        return sample_lab(u, a, dx, x);
    }
    let i = t.floor() as usize;
    let s = t - i as f64;
    let (p0, p1, p2, p3) = (u[i - 1], u[i], u[i + 1], u[i + 2]);
    -s * (s - 1.0) * (s - 2.0) / 6.0 * p0 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * p1
        - (s + 1.0) * s * (s - 2.0) / 2.0 * p2
        + (s + 1.0) * s * (s - 1.0) / 6.0 * p3
}

/// Leftmost up-crossing of `level`, located as the root of the cubic
/// interpolant in the bracketing cell; the flag reports further crossings.
pub fn track_front(u: &[f64], a: f64, dx: f64, level: f64) -> Result<(f64, bool)> {
    let n = u.len();
    let i = (0..n - 1)
        .find(|&i| u[i] < level && u[i + 1] >= level)
        .ok_or(Error::NoCrossing { level, t: f64::NAN })?;
    let (x0, x1) = (-a + i as f64 * dx, -a + (i + 1) as f64 * dx);
    let lin = x0 + dx * (level - u[i]) / (u[i + 1] - u[i]);
    let x = if i >= 1 && i + 2 < n {
        let g = |x: f64| sample_lab_cubic(u, a, dx, x) - level;
        if g(x0) < 0.0 && g(x1) >= 0.0 {
            bisect(g, x0, x1, 1e-13 * (1.0 + x0.abs())).unwrap_or(lin)
        } else {
            lin
        }
    } else {
        lin
    };
    let multiple = (i + 1..n - 1).any(|k| (u[k] < level) != (u[k + 1] < level));
    Ok((x, multiple))
}

/// Outcome of a monotone shifted run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneShiftReport {
    pub h: f64,
    pub c_h: f64,
    pub speed_fit: LineFit,
    /// `(t, sup_x |v(t, x) - V(x + ...)|)` against the aligned final profile.
    pub distances: Vec<(f64, f64)>,
    pub decay: Option<DecayFit>,
    /// Median distance over the second half of the run.
    pub floor: f64,
    /// Distances decrease over the fit window.
    pub monotone_decay: bool,
    pub distance_at_fit_end: f64,
}

/// Distances above this are still forming the front.
pub const DECAY_START: f64 = 1e-1;
/// The fit stops once the distance comes within this factor of the floor.
pub const FLOOR_FACTOR: f64 = 10.0;

/// Decay window: from the first distance below [`DECAY_START`] up to the
/// first one below `FLOOR_FACTOR ×` floor, the floor being the median over
/// the second half of the record (the last sample is the reference itself).
pub fn decay_window(distances: &[(f64, f64)]) -> (Vec<(f64, f64)>, f64) {
    let n = distances.len();
    let mut tail: Vec<f64> = distances[n / 2..n.saturating_sub(1)].iter().map(|p| p.1).filter(|d| d.is_finite()).collect();
    tail.sort_by(f64::total_cmp);
    let floor = tail.get(tail.len() / 2).copied().unwrap_or(0.0);
    let Some(start) = distances.iter().position(|p| p.1 <= DECAY_START) else {
        return (Vec::new(), floor);
    };
    let end = distances[start..]
        .iter()
        .position(|p| !(p.1 > FLOOR_FACTOR * floor))
        .map_or(n, |k| start + k);
    (distances[start..end].to_vec(), floor)
}

/// Run `v_t = v_xx + g(v(t, x - h)) - v` to `cfg.horizon` and fit the front
/// speed and the exponential decay of the distance to the aligned final
/// profile over [`decay_window`].
pub fn run_monotone_shift(
    g: &NonlinearityModel,
    h: f64,
    init: &InitialDatum,
    cfg: &SimConfig,
) -> Result<MonotoneShiftReport> {
    let mut cfg = cfg.clone();
    if cfg.snapshot_every == 0 {
        let (dt, _) = choose_step(g, 0.0, &cfg);
        cfg.snapshot_every = ((0.5 / dt).round() as usize).max(1);
    }
    let mut run = SimulationRun::new(g, 0.0, h, init, InitialHistory::Constant, &cfg)?;
    run.run_until(cfg.horizon)?;
    let speed_fit = run.fitted_speed().ok_or(Error::NoCrossing { level: g.theta(), t: run.t })?;
    let last = run.snapshots.last().cloned().expect("snapshots recorded");
    let theta = g.theta();
    let dx_last = 2.0 * last.a / (last.u.len() - 1) as f64;
    let (x_last, _) = track_front(&last.u, last.a, dx_last, theta)?;
    let distances: Vec<(f64, f64)> = exec::map(&run.snapshots, |s| {
        let dx = 2.0 * s.a / (s.u.len() - 1) as f64;
        let Ok((xf, _)) = track_front(&s.u, s.a, dx, theta) else {
            return (s.t, f64::NAN);
        };
        let offset = x_last - xf;
        // compare where both states are well inside their domains
        let lo = (-s.a).max(-last.a - offset) + 30.0;
        let hi = s.a.min(last.a - offset) - 30.0;
        let mut d = 0.0f64;
        let mut x = lo;
        while x <= hi {
            let v = sample_lab(&s.u, s.a, dx, x);
            let w = sample_lab_cubic(&last.u, last.a, dx_last, x + offset);
            d = d.max((v - w).abs());
            x += dx;
        }
        (s.t, d)
    });
    let (window, floor) = decay_window(&distances);
    let monotone_decay = window.windows(2).all(|w| w[1].1 <= w[0].1);
    let decay = if window.len() >= 3 {
        let ts: Vec<f64> = window.iter().map(|p| p.0).collect();
        let ls: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
        fit_line(&ts, &ls).map(|l| DecayFit { kappa: -l.slope, prefactor: l.intercept.exp(), r_squared: l.r_squared })
    } else {
        None
    };
    let distance_at_fit_end = window.last().map_or(f64::NAN, |p| p.1);
    Ok(MonotoneShiftReport {
        h,
        c_h: speed_fit.slope,
        speed_fit,
        distances,
        decay,
        floor,
        monotone_decay,
        distance_at_fit_end,
    })
}

/// `c_h` for every `h`, in input order.
pub fn shift_sweep(
    g: &NonlinearityModel,
    hs: &[f64],
    init: &InitialDatum,
    cfg: &SimConfig,
) -> Result<Vec<MonotoneShiftReport>> {
    exec::map(hs, |&h| run_monotone_shift(g, h, init, cfg)).into_iter().collect()
}

/// Fitted front speed of the delayed equation from a step datum.
pub fn front_speed(f: &NonlinearityModel, tau: f64, init: &InitialDatum, cfg: &SimConfig) -> Result<f64> {
    let mut run = SimulationRun::new(f, tau, 0.0, init, InitialHistory::Constant, cfg)?;
    run.run_until(cfg.horizon)?;
    run.fitted_speed().map(|l| l.slope).ok_or(Error::NoCrossing { level: f.theta(), t: run.t() })
}

/// Richardson extrapolation of three values at spacings `h, h/2, h/4`,
/// with the observed order. Returns `(value, order)`.
pub fn richardson(v1: f64, v2: f64, v3: f64) -> (f64, f64) {
    let d1 = v1 - v2;
    let d2 = v2 - v3;
    if d2 == 0.0 || d1 / d2 <= 1.0 {
        return (v3, f64::NAN);
    }
    let ratio = d1 / d2;
    let p = ratio.log2();
    (v3 - d2 / (ratio - 1.0), p)
}
