//! Diagnostics of a converged wave: landmarks, a priori invariants,
//! envelopes, the energy identity, tail classification, the sign-change
//! functional and wavetrain period estimates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::box_solver::BoxSolution;
use crate::error::{Error, Result};
use crate::exec;
use crate::nonlinearity::{linear_bound_k, Landmarks, NonlinearityModel};

/// Derivative values below this magnitude count as zero.
pub const DEAD_BAND: f64 = 1e-10;
/// Width excluded next to the right boundary.
pub const BOUNDARY_LAYER: f64 = 5.0;
pub const DEFAULT_TAIL_EPS: f64 = 1e-3;
pub const DEFAULT_TAIL_WINDOW: f64 = 40.0;

#[inline]
fn sign(v: f64, band: f64) -> i8 {
    if v > band {
        1
    } else if v < -band {
        -1
    } else {
        0
    }
}

/// Centered differences at interior nodes, one-sided at the ends.
pub fn node_derivative(sol: &BoxSolution) -> Vec<f64> {
    let g = sol.grid();
    let u = sol.profile.values();
    let dx = g.dx();
    let m = u.len();
    (0..m)
        .map(|i| {
            if i == 0 {
                (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx)
            } else if i == m - 1 {
                (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (2.0 * dx)
            } else {
                (u[i + 1] - u[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

/// `x_a`, `σ_*` and `σ_**`; `None` stands for `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveLandmarks {
    pub x_a: f64,
    pub sigma_star: Option<f64>,
    pub sigma_2star: Option<f64>,
    pub warnings: Vec<String>,
}

fn crossing(x0: f64, x1: f64, v0: f64, v1: f64) -> f64 {
    if v1 == v0 {
        x0
    } else {
        x0 + (x1 - x0) * v0 / (v0 - v1)
    }
}

/// Locate `x_a` (first up-crossing of `θ`), `σ_*` (first sign turn of `U'`
/// from positive to strictly negative after `x_a`) and `σ_**` (the next
/// turn back to strictly positive).
pub fn locate_landmarks(sol: &BoxSolution, theta: f64) -> Result<WaveLandmarks> {
    let g = sol.grid();
    let u = sol.profile.values();
    // a crossing into the right pin only means the interior stays below θ
    let i = (0..u.len() - 2)
        .find(|&i| u[i] < theta && u[i + 1] >= theta)
        .ok_or(Error::NoThetaCrossing { theta })?;
    let x_a = crossing(g.x(i), g.x(i + 1), u[i] - theta, u[i + 1] - theta);
    let d = node_derivative(sol);
    let last = u.len() - 2;
    let mut sigma_star = None;
    let mut sigma_2star = None;
    let mut k = i + 1;
    while k <= last {
        if sign(d[k], DEAD_BAND) < 0 {
            sigma_star = Some(crossing(g.x(k - 1), g.x(k), d[k - 1], d[k]));
            break;
        }
        k += 1;
    }
    if sigma_star.is_some() {
        let mut j = k + 1;
        while j <= last {
            if sign(d[j], DEAD_BAND) > 0 {
                sigma_2star = Some(crossing(g.x(j - 1), g.x(j), d[j - 1], d[j]));
                break;
            }
            j += 1;
        }
    }
    let mut warnings = Vec::new();
    for (name, v) in [("sigma_star", sigma_star), ("sigma_2star", sigma_2star)] {
        if let Some(x) = v {
            if x > g.a() - BOUNDARY_LAYER {
                warnings.push(format!("{name} = {x} lies in the boundary layer of x = a"));
            }
        }
    }
    Ok(WaveLandmarks { x_a, sigma_star, sigma_2star, warnings })
}

/// Lower and upper envelopes on `[-a, x_a]` and the slope bracket at `x_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// `min (u - ψ)` over nodes in `[-a, x_a]`.
    pub psi_margin: f64,
    /// `min (φ - u)` over the same nodes.
    pub phi_margin: f64,
    pub slope: f64,
    pub slope_lower: f64,
    /// `ψ'(x_a)` evaluated at `c_max`.
    pub slope_upper: f64,
    /// `ψ'(x_a)` evaluated at the computed speed.
    pub slope_upper_at_c: f64,
    pub nodes: usize,
}

impl EnvelopeReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.psi_margin >= -tol
            && self.phi_margin >= -tol
            && self.slope >= self.slope_lower - tol
            && self.slope <= self.slope_upper + tol
    }
}

/// `ψ(x) = θ (e^{r₊(x+a)} - e^{r₋(x+a)}) / (e^{r₊(x_a+a)} - e^{r₋(x_a+a)})`
/// with `r± = (c ± √(c²+4))/2`, written without overflow.
pub fn psi(theta: f64, c: f64, a: f64, x_a: f64, x: f64) -> f64 {
    let q = (c * c + 4.0).sqrt();
    let rp = 0.5 * (c + q);
    theta * (rp * (x - x_a)).exp() * (-q * (x + a)).exp_m1() / (-q * (x_a + a)).exp_m1()
}

/// `ψ'(x_a) = θ (r₊ + q / (e^{q(a+x_a)} - 1))`.
pub fn psi_slope(theta: f64, c: f64, a: f64, x_a: f64) -> f64 {
    let q = (c * c + 4.0).sqrt();
    theta * (0.5 * (c + q) + q / (q * (a + x_a)).exp_m1())
}

pub fn phi(theta: f64, c: f64, x_a: f64, x: f64) -> f64 {
    theta * (c * (x - x_a)).exp()
}

pub fn check_envelopes(sol: &BoxSolution, f: &NonlinearityModel, x_a: f64) -> EnvelopeReport {
    let g = sol.grid();
    let u = sol.profile.values();
    let (theta, c, a) = (f.theta(), sol.c, g.a());
    let mut psi_margin = f64::INFINITY;
    let mut phi_margin = f64::INFINITY;
    let mut nodes = 0;
    for (i, &ui) in u.iter().enumerate() {
        let x = g.x(i);
        if x > x_a {
            break;
        }
        psi_margin = psi_margin.min(ui - psi(theta, c, a, x_a, x));
        phi_margin = phi_margin.min(phi(theta, c, x_a, x) - ui);
        nodes += 1;
    }
    let d = node_derivative(sol);
    let slope = match g.locate(x_a) {
        crate::discretization::Stencil::Cell(i, w) => (1.0 - w) * d[i] + w * d[(i + 1).min(d.len() - 1)],
        _ => f64::NAN,
    };
    let c_max = linear_bound_k(f).k + 1.0;
    EnvelopeReport {
        psi_margin,
        phi_margin,
        slope,
        slope_lower: theta * c,
        slope_upper: psi_slope(theta, c_max, a, x_a),
        slope_upper_at_c: psi_slope(theta, c, a, x_a),
        nodes,
    }
}

/// A priori properties every converged box solution must have.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub min_u: f64,
    pub max_u: f64,
    pub m_max: f64,
    pub bounds_ok: bool,
    /// Right end of the monotone stretch `min(x_a + σ c τ, a)`.
    pub monotone_until: f64,
    pub monotone_ok: bool,
    pub c: f64,
    pub c_max: f64,
    pub speed_ok: bool,
    pub envelopes: EnvelopeReport,
    pub envelopes_ok: bool,
    pub theta_crossings: usize,
    pub single_crossing_ok: bool,
    pub liminf_proxy: f64,
}

impl InvariantReport {
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (ok, name) in [
            (self.bounds_ok, "bounds"),
            (self.monotone_ok, "monotone"),
            (self.speed_ok, "speed"),
            (self.envelopes_ok, "envelopes"),
            (self.single_crossing_ok, "single-crossing"),
        ] {
            if !ok {
                v.push(name);
            }
        }
        v
    }
}

/// Tolerance on envelope margins and the slope bracket.
pub const ENVELOPE_TOL: f64 = 1e-8;

pub fn check_invariants(sol: &BoxSolution, f: &NonlinearityModel) -> Result<InvariantReport> {
    let g = sol.grid();
    let u = sol.profile.values();
    let n = g.n();
    let interior = &u[1..=n];
    let min_u = interior.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_u = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lm = locate_landmarks(sol, f.theta())?;
    let monotone_until = (lm.x_a + sol.sigma * sol.c * sol.tau).min(g.a());
    let monotone_ok = (0..=n).take_while(|&i| g.x(i + 1) <= monotone_until + 1e-12).all(|i| u[i + 1] > u[i]);
    let c_max = linear_bound_k(f).k + 1.0;
    let envelopes = check_envelopes(sol, f, lm.x_a);
    let theta = f.theta();
    let theta_crossings = u.windows(2).filter(|w| (w[0] < theta) != (w[1] < theta)).count();
    let liminf_proxy = (0..u.len())
        .filter(|&i| g.x(i) >= lm.x_a + 5.0 && g.x(i) <= g.a() - BOUNDARY_LAYER)
        .map(|i| u[i])
        .fold(f64::INFINITY, f64::min);
    Ok(InvariantReport {
        min_u,
        max_u,
        m_max: f.m_max(),
        bounds_ok: min_u > 0.0 && max_u < f.m_max(),
        monotone_until,
        monotone_ok,
        c: sol.c,
        c_max,
        speed_ok: sol.c > 0.0 && sol.c < c_max,
        envelopes_ok: envelopes.ok(ENVELOPE_TOL),
        envelopes,
        theta_crossings,
        single_crossing_ok: theta_crossings == 1,
        liminf_proxy,
    })
}

/// Terms of the energy identity on `[-big_a, big_b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    /// `c∫U'²`.
    pub dissipation: f64,
    /// `[U'²/2 + F̂(U) - U²/2]` between the window ends.
    pub boundary: f64,
    /// `∫(f(U(x - cτ)) - f(U)) U'`; exactly zero without a shift.
    pub cross: f64,
}

impl EnergyTerms {
    pub fn residual(&self) -> f64 {
        (self.dissipation - self.boundary - self.cross).abs()
    }
}

/// `|R|` for the energy identity on `[-big_a, big_b]`:
/// `R = c∫U'² - [U'²/2 + F̂(U) - U²/2] - ∫(f(U(x - cτ)) - f(U)) U'`.
pub fn energy_residual(sol: &BoxSolution, f: &NonlinearityModel, big_a: f64, big_b: f64) -> Result<f64> {
    energy_terms(sol, f, big_a, big_b).map(|t| t.residual())
}

pub fn energy_terms(sol: &BoxSolution, f: &NonlinearityModel, big_a: f64, big_b: f64) -> Result<EnergyTerms> {
    let g = sol.grid();
    if !(-g.a() < -big_a && -big_a < big_b && big_b < g.a()) {
        return Err(Error::InvalidParameter(format!(
            "energy window [-{big_a}, {big_b}] must lie inside (-{a}, {a})",
            a = g.a()
        )));
    }
    let u = sol.profile.values();
    let dx = g.dx();
    let lo = ((g.a() - big_a) / dx).round() as usize;
    let hi = ((g.a() + big_b) / dx).round() as usize;
    let d = node_derivative(sol);
    let s = sol.sigma * sol.c * sol.tau;
    let trap = |h: &dyn Fn(usize) -> f64| {
        let inner: f64 = (lo + 1..hi).map(h).sum();
        dx * (inner + 0.5 * (h(lo) + h(hi)))
    };
    let kinetic = trap(&|i| d[i] * d[i]);
    let cross = if s == 0.0 {
        0.0
    } else {
        trap(&|i| (f.eval_f(sol.profile.shifted_sample(g.x(i) - s)) - f.eval_f(u[i])) * d[i])
    };
    let bracket = |i: usize| 0.5 * d[i] * d[i] + f.primitive(u[i]) - 0.5 * u[i] * u[i];
    Ok(EnergyTerms { dissipation: sol.c * kinetic, boundary: bracket(hi) - bracket(lo), cross })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    ConvergesTo1,
    Oscillating,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub class: TailClass,
    pub window: (f64, f64),
    pub sup_deviation: f64,
    pub sign_changes: usize,
    pub eps: f64,
}

/// Classify `U - 1` over `[a - 5 - window, a - 5]`.
pub fn classify_tail(sol: &BoxSolution, window: f64, eps: f64) -> TailReport {
    let g = sol.grid();
    let u = sol.profile.values();
    let hi = g.a() - BOUNDARY_LAYER;
    let lo = hi - window;
    let z: Vec<f64> = (0..u.len()).filter(|&i| g.x(i) >= lo && g.x(i) <= hi).map(|i| u[i] - 1.0).collect();
    let sup_deviation = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sign_changes = count_sign_changes(&z, DEAD_BAND);
    let class = if z.is_empty() {
        TailClass::Undetermined
    } else if sup_deviation < eps {
        TailClass::ConvergesTo1
    } else if sign_changes >= 4 && sup_deviation >= 10.0 * eps {
        TailClass::Oscillating
    } else {
        TailClass::Undetermined
    };
    TailReport { class, window: (lo, hi), sup_deviation, sign_changes, eps }
}

/// Default window `min(40, (a - x_a)/2)`.
pub fn default_window(sol: &BoxSolution, x_a: f64) -> f64 {
    DEFAULT_TAIL_WINDOW.min(0.5 * (sol.a - x_a))
}

fn count_sign_changes(z: &[f64], band: f64) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for &v in z {
        let s = sign(v, band);
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Number of strict sign alternations among the nonzero samples, or `None`
/// when every sample is zero.
pub fn sc_count(values: &[f64]) -> Option<usize> {
    if values.iter().all(|&v| v == 0.0) {
        return None;
    }
    Some(count_sign_changes(values, 0.0))
}

/// `sc(Ψ_t)` for translates `t ≥ σ_* + h`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScHistory {
    pub entries: Vec<(f64, usize)>,
    pub max_after: Option<usize>,
}

/// Discrete Lyapunov functional of a positive-feedback cyclic system: `sc`
/// rounded up to an even number. This, not `sc` itself, is non-increasing
/// along solutions.
pub fn lyapunov(sc: usize) -> usize {
    sc + sc % 2
}

impl ScHistory {
    /// [`lyapunov`] never increases along the history.
    pub fn non_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| lyapunov(w[1].1) <= lyapunov(w[0].1))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "sc"])?;
        for (t, sc) in &self.entries {
            w.write_record([t.to_string(), sc.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Build `Ψ_t = (U(t + ·) - 1 on [-h, 0], U'(t))` at every node
/// `t ∈ [σ_* + h, a - 5]` (every `stride`-th node) and count sign changes.
pub fn sc_history(sol: &BoxSolution, sigma_star: Option<f64>, h: f64, stride: usize) -> ScHistory {
    let Some(ss) = sigma_star else {
        return ScHistory::default();
    };
    let g = sol.grid();
    let u = sol.profile.values();
    let d = node_derivative(sol);
    let dx = g.dx();
    let lag = (h / dx).round() as usize;
    let start = ((ss + h + g.a()) / dx).ceil() as usize;
    let end = ((g.a() - BOUNDARY_LAYER + g.a()) / dx).floor() as usize;
    if start > end {
        return ScHistory::default();
    }
    let ts: Vec<usize> = (start..=end).step_by(stride.max(1)).filter(|&k| k >= lag).collect();
    let band = |v: f64| if v.abs() <= DEAD_BAND { 0.0 } else { v };
    let entries: Vec<(f64, usize)> = exec::map(&ts, |&k| {
        let mut psi: Vec<f64> = (k - lag..=k).map(|i| band(u[i] - 1.0)).collect();
        psi.push(band(d[k]));
        (g.x(k), sc_count(&psi).unwrap_or(0))
    });
    let max_after = entries.iter().map(|e| e.1).max();
    ScHistory { entries, max_after }
}

/// Trapping band check after `σ_*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrappingReport {
    pub min_u: f64,
    pub max_u: f64,
    pub lower: f64,
    pub upper: f64,
    pub ok: bool,
}

pub fn check_trapping(sol: &BoxSolution, sigma_star: f64, landmarks: &Landmarks, tol: f64) -> TrappingReport {
    let g = sol.grid();
    let u = sol.profile.values();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &v) in u.iter().enumerate() {
        let x = g.x(i);
        if x >= sigma_star && x <= g.a() - BOUNDARY_LAYER {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    TrappingReport {
        min_u: lo,
        max_u: hi,
        lower: landmarks.m2,
        upper: landmarks.m1,
        ok: lo >= landmarks.m2 - tol && hi <= landmarks.m1 + tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period: f64,
    pub amplitude: f64,
    pub peak_correlation: f64,
    /// Spacings between successive troughs.
    pub trough_spacings: Vec<f64>,
    /// Standard deviation of the spacings relative to the period.
    pub spacing_spread: f64,
}

impl PeriodEstimate {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "trough_spacing"])?;
        for (i, s) in self.trough_spacings.iter().enumerate() {
            w.write_record([i.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Period of a uniformly sampled signal from its autocorrelation: the
/// highest lag in the first positive lobe after the first negative lag,
/// parabolically refined. `None` if that peak is below 0.5. Troughs are the
/// midpoints of the excursions below the mean.
pub fn periodicity(z: &[f64], dt: f64) -> Option<PeriodEstimate> {
    let n = z.len();
    if n < 8 {
        return None;
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = z.iter().map(|v| v - mean).collect();
    let var = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var == 0.0 {
        return None;
    }
    let max_lag = n / 2;
    let r: Vec<f64> = exec::map_range(max_lag + 1, |k| {
        let s: f64 = (0..n - k).map(|i| y[i] * y[i + k]).sum();
        s / (n - k) as f64 / var
    });
    let first_neg = r.iter().position(|&v| v < 0.0)?;
    let lobe_start = (first_neg..=max_lag).find(|&k| r[k] >= 0.0)?;
    let lobe_end = (lobe_start..=max_lag).find(|&k| r[k] < 0.0).unwrap_or(max_lag + 1);
    let k = (lobe_start..lobe_end).max_by(|&i, &j| r[i].total_cmp(&r[j]))?;
    let (period, peak) = if k > 0 && k < max_lag {
        let (a, b, c) = (r[k - 1], r[k], r[k + 1]);
        let denom = a - 2.0 * b + c;
        let off = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        ((k as f64 + off) * dt, b - 0.25 * (a - c) * off)
    } else {
        (k as f64 * dt, r[k])
    };
    if peak < 0.5 {
        return None;
    }
    let mut troughs = Vec::new();
    let mut i = 0;
    while i < n {
        if y[i] >= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && y[i] < 0.0 {
            i += 1;
        }
        // excursions cut by the ends of the record are incomplete
        if start == 0 || i == n {
            continue;
        }
        // midpoint of the interpolated mean crossings: the trough of a
        // symmetric dip, the centre of a flat one
        let down = start as f64 - y[start] / (y[start] - y[start - 1]);
        let up = (i - 1) as f64 + y[i - 1] / (y[i - 1] - y[i]);
        troughs.push(0.5 * (down + up) * dt);
    }
    let spacings: Vec<f64> = troughs.windows(2).map(|w| w[1] - w[0]).collect();
    let spread = if spacings.len() >= 2 {
        let m = spacings.iter().sum::<f64>() / spacings.len() as f64;
        (spacings.iter().map(|s| (s - m).powi(2)).sum::<f64>() / spacings.len() as f64).sqrt() / period
    } else {
        f64::NAN
    };
    let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(PeriodEstimate {
        period,
        amplitude: 0.5 * (hi - lo),
        peak_correlation: peak,
        trough_spacings: spacings,
        spacing_spread: spread,
    })
}

/// Spatial period of `U - 1` over the right window (the tail must be
/// oscillating).
pub fn estimate_period(sol: &BoxSolution, tail: &TailReport) -> Option<PeriodEstimate> {
    if tail.class != TailClass::Oscillating {
        return None;
    }
    let g = sol.grid();
    let u = sol.profile.values();
    let z: Vec<f64> = (0..u.len())
        .filter(|&i| g.x(i) >= tail.window.0 && g.x(i) <= tail.window.1)
        .map(|i| u[i] - 1.0)
        .collect();
    periodicity(&z, g.dx())
}

/// Options of [`diagnose`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Tail window; `None` uses `min(40, (a - x_a)/2)`.
    pub window: Option<f64>,
    pub eps: f64,
    /// Energy window as a fraction of `a`.
    pub energy_fraction: f64,
    pub sc_stride: usize,
    pub trapping_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { window: None, eps: DEFAULT_TAIL_EPS, energy_fraction: 0.8, sc_stride: 1, trapping_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveDiagnostics {
    pub x_a: f64,
    pub sigma_star: Option<f64>,
    pub sigma_2star: Option<f64>,
    pub tail: TailReport,
    pub trapping: Option<TrappingReport>,
    pub trapping_ok: Option<bool>,
    pub energy_residual: f64,
    pub period: Option<PeriodEstimate>,
    pub sc_max_after: Option<usize>,
    /// The even-rounded `sc` never increases after `σ_* + h`.
    pub sc_non_increasing: bool,
    pub invariants: InvariantReport,
    pub warnings: Vec<String>,
    pub config: AnalysisConfig,
}

impl WaveDiagnostics {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run every diagnostic on a converged solution.
pub fn diagnose(sol: &BoxSolution, f: &NonlinearityModel, cfg: &AnalysisConfig) -> Result<(WaveDiagnostics, ScHistory)> {
    let lm = locate_landmarks(sol, f.theta())?;
    let window = cfg.window.unwrap_or_else(|| default_window(sol, lm.x_a));
    let tail = classify_tail(sol, window, cfg.eps);
    let e = cfg.energy_fraction * sol.a;
    let energy = energy_residual(sol, f, e, e)?;
    let h = sol.sigma * sol.c * sol.tau;
    let history = sc_history(sol, lm.sigma_star, h, cfg.sc_stride);
    let (trapping, trapping_ok) = match (lm.sigma_star, f.landmarks()) {
        (Some(ss), Some(l)) => {
            let t = check_trapping(sol, ss, &l, cfg.trapping_tol);
            let ok = t.ok;
            (Some(t), Some(ok))
        }
        _ => (None, None),
    };
    let period = estimate_period(sol, &tail);
    let invariants = check_invariants(sol, f)?;
    let mut warnings = lm.warnings.clone();
    if tail.class == TailClass::Undetermined {
        warnings.push("tail undetermined: slow convergence and small oscillation are not distinguished".into());
    }
    let diag = WaveDiagnostics {
        x_a: lm.x_a,
        sigma_star: lm.sigma_star,
        sigma_2star: lm.sigma_2star,
        tail,
        trapping,
        trapping_ok,
        energy_residual: energy,
        period,
        sc_max_after: history.max_after,
        sc_non_increasing: history.non_increasing(),
        invariants,
        warnings,
        config: cfg.clone(),
    };
    Ok((diag, history))
}
