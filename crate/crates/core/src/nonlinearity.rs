//! Birth-rate functions `f` and numerical checks of the structural
//! assumptions the wave construction relies on.
//!
//! Every model is extended by `0` to the left of `u = 0` and carries cached
//! landmarks: the unstable fixed point `θ`, `M = max_[0,1] f` with its
//! argmax, and `μ = f'(1)`. Oscillation landmarks `(β_peak, α, M1, M2)` are
//! attached once [`verify_oscillatory`] has located them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, bisect, golden_max, scan_max};

/// Points used by every dense scan.
pub const DENSE_POINTS: usize = 4096;
/// Default tolerance of the verification routines.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Step of the centered difference used for tabulated derivatives.
pub const TABULATED_FD_STEP: f64 = 1e-4;

/// Declarative description of a model, as found in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `f(u) = u + k u (u - θ)(1 - u)`.
    CubicShift { k: f64, theta: f64 },
    /// `β u² e^{-u}` conjugated so its fixed points sit at `0, θ, 1`.
    RickerSquare { beta: f64 },
    /// C¹ spline through the oscillation landmarks with `f'(1) = mu`.
    PiecewiseSteep {
        theta: f64,
        alpha: f64,
        beta_peak: f64,
        m1: f64,
        m2: f64,
        mu: f64,
    },
    /// Two-column `(u, f(u))` CSV.
    Tabulated {
        csv: std::path::PathBuf,
        #[serde(default)]
        theta: Option<f64>,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Result<NonlinearityModel> {
        match self {
            FamilySpec::CubicShift { k, theta } => NonlinearityModel::cubic_shift(*k, *theta),
            FamilySpec::RickerSquare { beta } => NonlinearityModel::ricker_square(*beta),
            FamilySpec::PiecewiseSteep {
                theta,
                alpha,
                beta_peak,
                m1,
                m2,
                mu,
            } => NonlinearityModel::piecewise_steep(*theta, *alpha, *beta_peak, *m1, *m2, *mu),
            FamilySpec::Tabulated { csv, theta } => NonlinearityModel::from_csv(csv, *theta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    CubicShift,
    RickerSquare,
    PiecewiseSteep,
    Tabulated,
}

/// Landmarks of the oscillatory assumption: `f' > 0` on `(0, β_peak)`,
/// `f' < 0` on `(β_peak, M1)`, `f(α) = 1`, `M1 = f(β_peak)`, `M2 = f(M1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub beta_peak: f64,
    pub alpha: f64,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Hermite {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    m0: f64,
    m1: f64,
}

impl Hermite {
    fn eval(&self, x: f64) -> f64 {
        let h = self.x1 - self.x0;
        let t = (x - self.x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y0
            + (t3 - 2.0 * t2 + t) * h * self.m0
            + (-2.0 * t3 + 3.0 * t2) * self.y1
            + (t3 - t2) * h * self.m1
    }

    fn deriv(&self, x: f64) -> f64 {
        let h = self.x1 - self.x0;
        let t = (x - self.x0) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.y0 + (-6.0 * t2 + 6.0 * t) * self.y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.m0
            + (3.0 * t2 - 2.0 * t) * self.m1
    }
}

/// `y(x) = y_end + (y_start - y_end) * (1 - s)^p`, `s = (x - x0)/(x1 - x0)`:
/// slope `-(y_start - y_end) p / (x1 - x0)` at `x0`, flat at `x1`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct PowerDrop {
    x0: f64,
    x1: f64,
    y_start: f64,
    y_end: f64,
    p: f64,
}

impl PowerDrop {
    fn eval(&self, x: f64) -> f64 {
        let s = ((x - self.x0) / (self.x1 - self.x0)).clamp(0.0, 1.0);
        self.y_end + (self.y_start - self.y_end) * (1.0 - s).powf(self.p)
    }

    fn deriv(&self, x: f64) -> f64 {
        let w = self.x1 - self.x0;
        let s = ((x - self.x0) / w).clamp(0.0, 1.0);
        -(self.y_start - self.y_end) * self.p * (1.0 - s).powf(self.p - 1.0) / w
    }
}

#[derive(Clone, Debug, PartialEq)]
struct SteepShape {
    rise: [Hermite; 3],
    // β_peak → 1, mirrored: parametrized from u = 1 leftwards.
    fall_left: PowerDrop,
    // 1 → M1.
    fall_right: PowerDrop,
    beta_peak: f64,
    m1: f64,
    m2: f64,
}

impl SteepShape {
    fn eval(&self, u: f64) -> f64 {
        if u <= self.rise[2].x1 {
            let seg = self.rise.iter().find(|s| u <= s.x1).unwrap_or(&self.rise[2]);
            seg.eval(u)
        } else if u <= 1.0 {
            // mirror: x = 2 - u runs from 1 to 2 - β_peak
            self.fall_left.eval(2.0 - u)
        } else if u <= self.m1 {
            self.fall_right.eval(u)
        } else {
            self.m2
        }
    }

    fn deriv(&self, u: f64) -> f64 {
        if u <= self.rise[2].x1 {
            let seg = self.rise.iter().find(|s| u <= s.x1).unwrap_or(&self.rise[2]);
            seg.deriv(u)
        } else if u <= 1.0 {
            -self.fall_left.deriv(2.0 - u)
        } else if u <= self.m1 {
            self.fall_right.deriv(u)
        } else {
            0.0
        }
    }
}

/// Monotone-preserving cubic interpolant: second-order three-point slopes,
/// limited Fritsch–Carlson style where they would create overshoot.
#[derive(Clone, Debug, PartialEq)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::InvalidParameter(
                "tabulated model needs at least 3 samples with matching columns".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "tabulated u column must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulated values must be finite".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut ms = vec![0.0; n];
        for i in 1..n - 1 {
            ms[i] = if d[i - 1] * d[i] <= 0.0 {
                0.0
            } else {
                (h[i] * d[i - 1] + h[i - 1] * d[i]) / (h[i - 1] + h[i])
            };
        }
        ms[0] = ((2.0 * h[0] + h[1]) * d[0] - h[0] * d[1]) / (h[0] + h[1]);
        if ms[0] * d[0] <= 0.0 {
            ms[0] = 0.0;
        }
        let (hl, hp) = (h[n - 2], h[n - 3]);
        ms[n - 1] = ((2.0 * hl + hp) * d[n - 2] - hl * d[n - 3]) / (hl + hp);
        if ms[n - 1] * d[n - 2] <= 0.0 {
            ms[n - 1] = 0.0;
        }
        for k in 0..n - 1 {
            if d[k] == 0.0 {
                ms[k] = 0.0;
                ms[k + 1] = 0.0;
                continue;
            }
            let a = ms[k] / d[k];
            let b = ms[k + 1] / d[k];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                ms[k] = t * a * d[k];
                ms[k + 1] = t * b * d[k];
            }
        }
        Ok(Self { xs, ys, ms })
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        Hermite {
            x0: self.xs[k],
            x1: self.xs[k + 1],
            y0: self.ys[k],
            y1: self.ys[k + 1],
            m0: self.ms[k],
            m1: self.ms[k + 1],
        }
        .eval(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Cubic { k: f64, theta: f64 },
    Ricker { beta: f64, scale: f64 },
    Steep(Box<SteepShape>),
    Table(MonotoneCubic),
}

impl Shape {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Shape::Cubic { k, theta } => (u + k * u * (u - theta) * (1.0 - u)).max(0.0),
            Shape::Ricker { beta, scale } => beta * scale * u * u * (-scale * u).exp(),
            Shape::Steep(s) => s.eval(u),
            Shape::Table(t) => t.eval(u),
        }
    }
}

/// A birth-rate function with cached landmarks. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearityModel {
    kind: Kind,
    params: Vec<(String, f64)>,
    shape: Shape,
    theta: f64,
    m_max: f64,
    argmax: f64,
    landmarks: Option<Landmarks>,
    mu1: f64,
    h_fd: Option<f64>,
}

impl NonlinearityModel {
    pub fn cubic_shift(k: f64, theta: f64) -> Result<Self> {
        if !(k > 0.0) || !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cubic shift needs k > 0 and 0 < theta < 1 (k = {k}, theta = {theta})"
            )));
        }
        let mut m = Self::raw(
            Kind::CubicShift,
            vec![("k".into(), k), ("theta".into(), theta)],
            Shape::Cubic { k, theta },
            theta,
            None,
        );
        m.mu1 = 1.0 - k * (1.0 - theta);
        Ok(m)
    }

    pub fn ricker_square(beta: f64) -> Result<Self> {
        if !(beta > std::f64::consts::E) {
            return Err(Error::InvalidParameter(format!(
                "ricker square needs beta > e for two positive fixed points (beta = {beta})"
            )));
        }
        let g = |u: f64| beta * u * (-u).exp() - 1.0;
        let u1 = bisect(g, 1e-12, 1.0, 1e-15).expect("bracketed lower fixed point");
        let u2 = bisect(g, 1.0, 60.0, 1e-14).expect("bracketed upper fixed point");
        let theta = u1 / u2;
        let mut m = Self::raw(
            Kind::RickerSquare,
            vec![("beta".into(), beta), ("scale".into(), u2)],
            Shape::Ricker { beta, scale: u2 },
            theta,
            None,
        );
        m.mu1 = m.fprime(1.0);
        Ok(m)
    }

    /// C¹ spline with prescribed landmarks and slope `mu = f'(1)`.
    ///
    /// The rising part is cubic Hermite through `(0,0)`, `(θ,θ)`, `(α,1)`,
    /// `(β_peak, M1)` with slopes `0, 2, harmonic mean, 0`. The two
    /// descending parts (`β_peak → 1` and `1 → M1`) are power-law drops,
    /// which stay monotone for any steepness at `u = 1`; `f ≡ M2` beyond `M1`.
    pub fn piecewise_steep(
        theta: f64,
        alpha: f64,
        beta_peak: f64,
        m1: f64,
        m2: f64,
        mu: f64,
    ) -> Result<Self> {
        let ordered = 0.0 < theta && theta < alpha && alpha < beta_peak && beta_peak < 1.0 && m1 > 1.0;
        if !ordered || !(m2 > 0.0 && m2 < 1.0) || !(mu < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "piecewise steep needs 0 < theta < alpha < beta_peak < 1 < m1, 0 < m2 < 1, mu < 0 \
                 (got {theta}, {alpha}, {beta_peak}, {m1}, {m2}, {mu})"
            )));
        }
        let p_left = -mu * (1.0 - beta_peak) / (m1 - 1.0);
        let p_right = -mu * (m1 - 1.0) / (1.0 - m2);
        if p_left <= 1.0 || p_right <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "|mu| = {} too small for the landmarks: the drops need exponents > 1 \
                 (got {p_left:.3}, {p_right:.3})",
                -mu
            )));
        }
        let d1 = (1.0 - theta) / (alpha - theta);
        let d2 = (m1 - 1.0) / (beta_peak - alpha);
        let s_alpha = 2.0 * d1 * d2 / (d1 + d2);
        let rise = [
            Hermite { x0: 0.0, x1: theta, y0: 0.0, y1: theta, m0: 0.0, m1: 2.0 },
            Hermite { x0: theta, x1: alpha, y0: theta, y1: 1.0, m0: 2.0, m1: s_alpha },
            Hermite { x0: alpha, x1: beta_peak, y0: 1.0, y1: m1, m0: s_alpha, m1: 0.0 },
        ];
        let shape = SteepShape {
            rise,
            fall_left: PowerDrop { x0: 1.0, x1: 2.0 - beta_peak, y_start: 1.0, y_end: m1, p: p_left },
            fall_right: PowerDrop { x0: 1.0, x1: m1, y_start: 1.0, y_end: m2, p: p_right },
            beta_peak,
            m1,
            m2,
        };
        let params = vec![
            ("theta".into(), theta),
            ("alpha".into(), alpha),
            ("beta_peak".into(), beta_peak),
            ("m1".into(), m1),
            ("m2".into(), m2),
            ("mu".into(), mu),
        ];
        let mut m = Self::raw(Kind::PiecewiseSteep, params, Shape::Steep(Box::new(shape)), theta, None);
        m.mu1 = mu;
        Ok(m)
    }

    /// Tabulated model through `(u, f(u))` samples. `theta` is detected as the
    /// first sign change of `f(u) - u` from below in `(0, 1)` when not given.
    pub fn from_samples(us: Vec<f64>, fs: Vec<f64>, theta: Option<f64>) -> Result<Self> {
        let table = MonotoneCubic::new(us.clone(), fs)?;
        let shape = Shape::Table(table);
        let theta = match theta {
            Some(t) => t,
            None => {
                let h = |u: f64| shape.eval(u) - u;
                let n = DENSE_POINTS;
                let mut found = None;
                for i in 1..n {
                    let a = i as f64 / n as f64;
                    let b = (i + 1) as f64 / n as f64;
                    if h(a) < 0.0 && h(b) >= 0.0 && b < 1.0 {
                        found = bisect(h, a, b, 1e-15);
                        break;
                    }
                }
                found.ok_or_else(|| {
                    Error::InvalidParameter("tabulated model has no unstable fixed point in (0, 1)".into())
                })?
            }
        };
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside (0, 1)")));
        }
        let params = vec![
            ("samples".into(), us.len() as f64),
            ("u_min".into(), us[0]),
            ("u_max".into(), us[us.len() - 1]),
        ];
        let mut m = Self::raw(Kind::Tabulated, params, shape, theta, Some(TABULATED_FD_STEP));
        m.mu1 = m.fprime(1.0);
        Ok(m)
    }

    /// Tabulated model from `f` sampled at `n + 1` uniform points of `[0, u_max]`.
    pub fn tabulate(model: &NonlinearityModel, u_max: f64, n: usize) -> Result<Self> {
        let us: Vec<f64> = (0..=n).map(|i| u_max * i as f64 / n as f64).collect();
        let fs = us.iter().map(|&u| model.eval_f(u)).collect();
        Self::from_samples(us, fs, None)
    }

    /// Load a two-column `(u, f(u))` CSV; a header row is optional.
    pub fn from_csv(path: &Path, theta: Option<f64>) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut us = Vec::new();
        let mut fs = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidParameter(format!("row {row}: expected two columns")));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(u), Ok(f)) => {
                    us.push(u);
                    fs.push(f);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::InvalidParameter(format!("row {row}: non-numeric value")));
                }
            }
        }
        Self::from_samples(us, fs, theta)
    }

    fn raw(kind: Kind, params: Vec<(String, f64)>, shape: Shape, theta: f64, h_fd: Option<f64>) -> Self {
        let (argmax, m_max) = scan_max(|u| shape.eval(u), 0.0, 1.0, DENSE_POINTS);
        let landmarks = match &shape {
            Shape::Steep(s) => {
                let alpha = params.iter().find(|(k, _)| k == "alpha").map(|p| p.1).unwrap_or(f64::NAN);
                Some(Landmarks { beta_peak: s.beta_peak, alpha, m1: s.m1, m2: s.m2 })
            }
            _ => None,
        };
        Self {
            kind,
            params,
            shape,
            theta,
            m_max,
            argmax,
            landmarks,
            mu1: f64::NAN,
            h_fd,
        }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `M = max_[0,1] f`.
    pub fn m_max(&self) -> f64 {
        self.m_max
    }

    pub fn argmax(&self) -> f64 {
        self.argmax
    }

    pub fn landmarks(&self) -> Option<Landmarks> {
        self.landmarks
    }

    /// `μ = f'(1)`.
    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    /// Finite-difference step used for derivatives, if any.
    pub fn h_fd(&self) -> Option<f64> {
        self.h_fd
    }

    pub fn with_landmarks(mut self, landmarks: Landmarks) -> Self {
        self.landmarks = Some(landmarks);
        self
    }

    /// `f(u)`, extended by zero for `u < 0`.
    #[inline]
    pub fn eval_f(&self, u: f64) -> f64 {
        if u < 0.0 {
            0.0
        } else {
            self.shape.eval(u)
        }
    }

    /// `f'(u)` for `u >= 0`.
    pub fn eval_fprime(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "f' is only defined on [0, inf), got u = {u}"
            )));
        }
        Ok(self.fprime(u))
    }

    /// Total version of `f'`: `0` left of the origin, right derivative at `0`.
    #[inline]
    pub fn fprime(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Cubic { k, theta } => {
                // zero where the cubic is clipped
                if self.shape.eval(u) <= 0.0 && u > 0.0 {
                    0.0
                } else {
                    1.0 + k * (-3.0 * u * u + 2.0 * (1.0 + theta) * u - theta)
                }
            }
            Shape::Ricker { beta, scale } => beta * scale * (2.0 * u - scale * u * u) * (-scale * u).exp(),
            Shape::Steep(s) => s.deriv(u),
            Shape::Table(_) => {
                let h = self.h_fd.unwrap_or(TABULATED_FD_STEP);
                if u >= h {
                    (self.shape.eval(u + h) - self.shape.eval(u - h)) / (2.0 * h)
                } else {
                    (-3.0 * self.shape.eval(u) + 4.0 * self.shape.eval(u + h) - self.shape.eval(u + 2.0 * h))
                        / (2.0 * h)
                }
            }
        }
    }

    /// `F̂(u) = ∫_0^u f`, computed by adaptive quadrature (exact for the cubic).
    pub fn primitive(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.shape {
            // closed form unless the cubic is clipped near 0
            Shape::Cubic { k, theta } if u <= 1.0 && k * theta <= 1.0 => {
                let u2 = u * u;
                0.5 * u2 + k * (-0.25 * u2 * u2 + (1.0 + theta) * u2 * u / 3.0 - 0.5 * theta * u2)
            }
            _ => {
                self.integrate_split(|x| self.eval_f(x), 0.0, u, 1e-14).0
            }
        }
    }

    /// Adaptive Simpson on `[lo, hi]`, split at the knots of the model.
    fn integrate_split<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
        let mut total = (0.0, 0.0);
        let mut a = lo;
        let mut knots = self.knots();
        knots.sort_by(f64::total_cmp);
        for b in knots.into_iter().filter(|&x| x > lo && x < hi).chain([hi]) {
            let (v, e) = adaptive_simpson(&g, a, b, tol);
            total = (total.0 + v, total.1 + e);
            a = b;
        }
        total
    }

    /// Points where the model is only C¹ (quadrature splits there).
    fn knots(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Steep(s) => vec![s.rise[0].x1, s.rise[1].x1, s.beta_peak, 1.0, s.m1],
            Shape::Cubic { k, theta } => {
                // roots of 1 + k (u - θ)(1 - u): ends of the clipped intervals
                let b = 1.0 + theta;
                let disc = (b * b - 4.0 * (theta - 1.0 / k)).sqrt();
                [0.5 * (b - disc), 0.5 * (b + disc)].into_iter().filter(|&r| r > 0.0).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Upper end of the sampled range used by the checks.
    pub fn sample_range(&self) -> f64 {
        (1.5 * self.m_max).max(2.0)
    }

    /// `sup |f'|` on `[lo, hi]`: dense grid plus golden-section refinement.
    pub fn fprime_sup(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let mut best = scan_max(|u| self.fprime(u).abs(), lo, hi, DENSE_POINTS).1;
        for k in self.knots() {
            if k >= lo && k <= hi {
                best = best.max(self.fprime(k).abs());
            }
        }
        best
    }
}

/// Anything that can play the role of `f` in the box problem.
pub trait Reaction: Sync {
    fn f(&self, u: f64) -> f64;
    fn df(&self, u: f64) -> f64;
}

impl Reaction for NonlinearityModel {
    #[inline]
    fn f(&self, u: f64) -> f64 {
        self.eval_f(u)
    }
    #[inline]
    fn df(&self, u: f64) -> f64 {
        self.fprime(u)
    }
}

/// `f(u) = u`: the reaction term vanishes and the box problem is linear.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Identity;

impl Reaction for Identity {
    #[inline]
    fn f(&self, u: f64) -> f64 {
        u
    }
    #[inline]
    fn df(&self, _u: f64) -> f64 {
        1.0
    }
}

/// One verified clause.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub pass: bool,
    pub clauses: Vec<ClauseResult>,
    pub warnings: Vec<String>,
    pub m_max: f64,
    pub argmax: f64,
    /// `∫_0^1 (f - u)` for the bistable check, or `∫_0^{M2} (min(f, M2) - u)`
    /// for the oscillatory check.
    pub integral: f64,
    pub integral_error: f64,
    pub landmarks: Option<Landmarks>,
}

impl AssumptionReport {
    fn from_clauses(clauses: Vec<ClauseResult>, warnings: Vec<String>, m: &NonlinearityModel) -> Self {
        Self {
            pass: clauses.iter().all(|c| c.pass),
            clauses,
            warnings,
            m_max: m.m_max,
            argmax: m.argmax,
            integral: f64::NAN,
            integral_error: f64::NAN,
            landmarks: None,
        }
    }

    pub fn failed(&self) -> Vec<&str> {
        self.clauses.iter().filter(|c| !c.pass).map(|c| c.clause.as_str()).collect()
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn clause(name: &str, pass: bool, value: f64, tolerance: f64) -> ClauseResult {
    ClauseResult { clause: name.into(), pass, value, tolerance }
}

/// Interior sample points of `(lo, hi)`.
fn interior(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

/// Check the bistable assumption: fixed points, sign pattern of `F = f - u`,
/// `f > θ` on `(θ, M]`, and `∫_0^1 F > 0`. Violations are reported, not raised.
pub fn verify_bistable(model: &NonlinearityModel, tol: f64) -> AssumptionReport {
    let f = |u: f64| model.eval_f(u);
    let big_f = |u: f64| f(u) - u;
    let theta = model.theta;
    let u_max = model.sample_range();
    let n = DENSE_POINTS;
    let mut clauses = Vec::new();
    let mut warnings = Vec::new();

    let fp_res = f(0.0).abs().max((f(theta) - theta).abs()).max((f(1.0) - 1.0).abs());
    clauses.push(clause("bistable-fixed-points", fp_res <= tol, fp_res, tol));

    let min_f = (0..=n).map(|i| f(u_max * i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    clauses.push(clause("bistable-nonnegative", min_f >= -tol, min_f, tol));

    let low = interior(0.0, theta, n).map(big_f).fold(f64::NEG_INFINITY, f64::max);
    clauses.push(clause("bistable-sign-low", low < 0.0, low, 0.0));
    let mid = interior(theta, 1.0, n).map(big_f).fold(f64::INFINITY, f64::min);
    clauses.push(clause("bistable-sign-mid", mid > 0.0, mid, 0.0));
    let high = interior(1.0, u_max, n).map(big_f).fold(f64::NEG_INFINITY, f64::max);
    clauses.push(clause("bistable-sign-high", high < 0.0, high, 0.0));

    clauses.push(clause("bistable-max", model.m_max >= 1.0 - tol, model.m_max, tol));

    let above = if model.m_max > theta + tol {
        let lo = theta + tol;
        (0..=n)
            .map(|i| f(lo + (model.m_max - lo) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
            - theta
    } else {
        f64::NAN
    };
    clauses.push(clause("bistable-above-theta", above > 0.0, above, 0.0));

    let (integral, err) = model.integrate_split(big_f, 0.0, 1.0, tol * 1e-2);
    clauses.push(clause("bistable-integral", integral > 0.0 && err < tol, integral, tol));

    for (name, p) in [("0", 0.0), ("theta", theta), ("1", 1.0)] {
        if (model.fprime(p) - 1.0).abs() < 1e-6 {
            warnings.push(format!("degenerate slope f'({name}) = 1: solvers may converge slowly"));
        }
    }

    let mut report = AssumptionReport::from_clauses(clauses, warnings, model);
    report.integral = integral;
    report.integral_error = err;
    report
}

/// Check the oscillatory assumption and locate `(β_peak, α, M1, M2)`.
/// Clause failures are reported; a model whose derivative never changes
/// sign raises [`Error::NoPeak`].
pub fn verify_oscillatory(model: &NonlinearityModel, tol: f64) -> Result<AssumptionReport> {
    let f = |u: f64| model.eval_f(u);
    let df = |u: f64| model.fprime(u);
    let theta = model.theta;
    let u_max = model.sample_range();
    let n = DENSE_POINTS;

    let sign_change = interior(0.0, u_max, n).any(|u| df(u) < 0.0) && interior(0.0, u_max, n).any(|u| df(u) > 0.0);
    if !sign_change {
        return Err(Error::NoPeak { upper: u_max });
    }

    let beta = model.argmax;
    let m1 = model.m_max;
    let mut clauses = Vec::new();
    if beta >= 1.0 - 1e-9 || m1 <= 1.0 + tol {
        clauses.push(clause("oscillatory-order", false, m1 - 1.0, tol));
        let mut r = AssumptionReport::from_clauses(clauses, vec!["M1 > 1 required: maximum of f on [0,1] sits at u = 1".into()], model);
        r.pass = false;
        return Ok(r);
    }
    let alpha = bisect(|u| f(u) - 1.0, theta, beta, 1e-15).unwrap_or(f64::NAN);
    let m2 = f(m1);

    let order_gap = [alpha - theta, beta - alpha, 1.0 - beta, m1 - 1.0]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    clauses.push(clause("oscillatory-order", order_gap > 0.0, order_gap, 0.0));

    let rise = interior(0.0, beta, n).map(df).fold(f64::INFINITY, f64::min);
    clauses.push(clause("oscillatory-rise", rise > 0.0, rise, 0.0));
    let fall = interior(beta, m1, n).map(df).fold(f64::NEG_INFINITY, f64::max);
    clauses.push(clause("oscillatory-fall", fall < 0.0, fall, 0.0));
    clauses.push(clause("oscillatory-return", m2 - alpha > tol, m2 - alpha, tol));

    let g = |u: f64| f(u).min(m2) - u;
    let mut integral = 0.0;
    let mut err = 0.0;
    // split at the kinks of min(f, M2)
    let mut cuts = vec![0.0];
    for i in 0..n {
        let a = m2 * i as f64 / n as f64;
        let b = m2 * (i + 1) as f64 / n as f64;
        if (f(a) - m2) * (f(b) - m2) < 0.0 {
            if let Some(x) = bisect(|u| f(u) - m2, a, b, 1e-15) {
                cuts.push(x);
            }
        }
    }
    cuts.push(m2);
    for w in cuts.windows(2) {
        let (v, e) = adaptive_simpson(g, w[0], w[1], tol * 1e-2);
        integral += v;
        err += e;
    }
    clauses.push(clause("oscillatory-integral", integral > 0.0 && err < tol, integral, tol));

    let mut report = AssumptionReport::from_clauses(clauses, Vec::new(), model);
    report.integral = integral;
    report.integral_error = err;
    report.landmarks = Some(Landmarks { beta_peak: beta, alpha, m1, m2 });
    Ok(report)
}

/// `K = sup_{u>0} f(u)/u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBound {
    pub k: f64,
    pub argmax: f64,
    /// `K = 0`: `f` vanishes on the sampled range.
    pub degenerate: bool,
}

/// Smallest `K` with `f(u) <= K u` on the sampled range. Beyond the range
/// `f < u <= K u` whenever the bistable sign pattern holds.
pub fn linear_bound_k(model: &NonlinearityModel) -> LinearBound {
    let u_max = model.sample_range().max(10.0);
    let ratio = |u: f64| if u <= 0.0 { model.fprime(0.0) } else { model.eval_f(u) / u };
    let n = DENSE_POINTS * 4;
    let mut best = (0.0, ratio(0.0));
    let mut best_i = 0;
    for i in 1..=n {
        let u = u_max * i as f64 / n as f64;
        let r = ratio(u);
        if r > best.1 {
            best = (u, r);
            best_i = i;
        }
    }
    if best_i > 0 {
        let a = u_max * (best_i - 1) as f64 / n as f64;
        let b = u_max * ((best_i + 1).min(n)) as f64 / n as f64;
        let refined = golden_max(ratio, a.max(1e-300), b, 1e-14);
        if refined.1 > best.1 {
            best = refined;
        }
    }
    let k = best.1.max(0.0);
    LinearBound { k, argmax: best.0, degenerate: k == 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cubic() -> NonlinearityModel {
        NonlinearityModel::cubic_shift(2.0, 0.25).unwrap()
    }

    pub(crate) fn steep(mu: f64) -> NonlinearityModel {
        NonlinearityModel::piecewise_steep(0.1, 0.3, 0.5, 1.4, 0.8, mu).unwrap()
    }

    #[test]
    fn cubic_values() {
        let m = cubic();
        assert_eq!(m.eval_f(0.0), 0.0);
        assert_eq!(m.eval_f(1.0), 1.0);
        assert_abs_diff_eq!(m.eval_f(0.5), 0.625, epsilon = 1e-15);
        assert_eq!(m.eval_f(-3.0), 0.0);
        assert_abs_diff_eq!(m.eval_fprime(1.0).unwrap(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mu1(), -0.5, epsilon = 1e-15);
        assert!(m.eval_fprime(-0.1).is_err());
    }

    #[test]
    fn cubic_passes_bistable_with_closed_form_integral() {
        let r = verify_bistable(&cubic(), DEFAULT_TOL);
        assert!(r.pass, "{:?}", r.failed());
        assert_abs_diff_eq!(r.integral, 1.0 / 12.0, epsilon = 1e-10);
    }

    #[test]
    fn cubic_with_high_threshold_fails_integral_clause() {
        let m = NonlinearityModel::cubic_shift(2.0, 0.6).unwrap();
        let r = verify_bistable(&m, DEFAULT_TOL);
        assert!(!r.pass);
        assert_eq!(r.failed(), vec!["bistable-integral"]);
        // k θ > 1: f is clipped to 0 on [0, u0], adding back -∫ raw there
        let u0 = (1.6 - (1.6f64 * 1.6 - 0.4).sqrt()) / 2.0;
        let raw = |u: f64| {
            let u2 = u * u;
            0.5 * u2 + 2.0 * (-0.25 * u2 * u2 + 1.6 * u2 * u / 3.0 - 0.3 * u2)
        };
        assert_abs_diff_eq!(r.integral, 2.0 * (1.0 / 12.0 - 0.1) - raw(u0), epsilon = 1e-8);
    }

    #[test]
    fn identity_fails_strict_sign_pattern() {
        let us: Vec<f64> = (0..=200).map(|i| i as f64 / 100.0).collect();
        let m = NonlinearityModel::from_samples(us.clone(), us, Some(0.5)).unwrap();
        let r = verify_bistable(&m, DEFAULT_TOL);
        assert!(!r.pass);
        let failed = r.failed();
        assert!(failed.contains(&"bistable-sign-low") && failed.contains(&"bistable-sign-mid"));
    }

    #[test]
    fn linear_bound_for_cubic_matches_calculus() {
        let kb = linear_bound_k(&cubic());
        assert_abs_diff_eq!(kb.k, 1.28125, epsilon = 1e-10);
        assert_abs_diff_eq!(kb.argmax, 0.625, epsilon = 1e-5);
        assert!(!kb.degenerate);
    }

    #[test]
    fn linear_bound_zero_model_is_degenerate() {
        let us: Vec<f64> = (0..=10).map(|i| i as f64 / 5.0).collect();
        let zs = vec![0.0; us.len()];
        let m = NonlinearityModel::from_samples(us, zs, Some(0.5)).unwrap();
        let kb = linear_bound_k(&m);
        assert_eq!(kb.k, 0.0);
        assert!(kb.degenerate);
    }

    #[test]
    fn ricker_square_fixed_points_and_refinement() {
        let m = NonlinearityModel::ricker_square(4.0).unwrap();
        assert!(m.eval_f(0.0).abs() < 1e-12);
        assert!((m.eval_f(m.theta()) - m.theta()).abs() < 1e-12);
        assert!((m.eval_f(1.0) - 1.0).abs() < 1e-12);
        assert!(verify_bistable(&m, DEFAULT_TOL).pass);
        // Richardson-style check of the grid maximum: a finer scan agrees.
        let coarse = linear_bound_k(&m).k;
        let fine = {
            let n = 200_000;
            (1..=n).map(|i| 10.0 * i as f64 / n as f64).map(|u| m.eval_f(u) / u).fold(0.0, f64::max)
        };
        assert!((coarse - fine).abs() < 1e-6 && coarse >= fine - 1e-12);
    }

    #[test]
    fn ricker_below_e_squared_over_two_has_unit_max() {
        let m = NonlinearityModel::ricker_square(3.5).unwrap();
        assert!((m.m_max() - 1.0).abs() < 1e-9, "M = {}", m.m_max());
        let r = verify_oscillatory(&m, DEFAULT_TOL).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failed(), vec!["oscillatory-order"]);
    }

    #[test]
    fn monotone_table_has_no_peak() {
        let us: Vec<f64> = (0..=100).map(|i| i as f64 / 50.0).collect();
        let fs: Vec<f64> = us.iter().map(|u| u * u / (0.1 + u * u)).collect();
        let m = NonlinearityModel::from_samples(us, fs, None).unwrap();
        assert!(matches!(verify_oscillatory(&m, DEFAULT_TOL), Err(Error::NoPeak { .. })));
    }

    #[test]
    fn tabulated_derivative_matches_analytic() {
        let c = cubic();
        let t = NonlinearityModel::tabulate(&c, 2.0, 8192).unwrap();
        assert_eq!(t.h_fd(), Some(1e-4));
        assert!((t.theta() - 0.25).abs() < 1e-8);
        let d = t.eval_fprime(0.5).unwrap();
        assert!((d - c.eval_fprime(0.5).unwrap()).abs() < 1e-6, "{d}");
    }

    #[test]
    fn steep_family_passes_both_assumptions() {
        let m = steep(-20.0);
        assert!((m.fprime(1.0) + 20.0).abs() < 1e-10);
        assert!((m.fprime(1.0 - 1e-7) - m.fprime(1.0 + 1e-7)).abs() < 1e-3);
        let b = verify_bistable(&m, DEFAULT_TOL);
        assert!(b.pass, "{:?}", b.failed());
        let o = verify_oscillatory(&m, DEFAULT_TOL).unwrap();
        assert!(o.pass, "{:?}", o.failed());
        assert_eq!(o.clauses.len(), 5);
        let l = o.landmarks.unwrap();
        assert!((l.beta_peak - 0.5).abs() < 1e-6);
        assert!((l.alpha - 0.3).abs() < 1e-9);
        assert!((l.m1 - 1.4).abs() < 1e-9);
        assert!((l.m2 - 0.8).abs() < 1e-9);
    }

    #[test]
    fn lowered_plateau_fails_return_clause() {
        let m = NonlinearityModel::piecewise_steep(0.1, 0.3, 0.5, 1.4, 0.25, -20.0).unwrap();
        let o = verify_oscillatory(&m, DEFAULT_TOL).unwrap();
        assert!(o.failed().contains(&"oscillatory-return"));
    }

    #[test]
    fn report_serializes_clause_entries() {
        let r = verify_bistable(&cubic(), DEFAULT_TOL);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let first = &v["clauses"][0];
        for key in ["clause", "pass", "value", "tolerance"] {
            assert!(first.get(key).is_some());
        }
    }

    #[test]
    fn primitive_matches_quadrature() {
        let m = steep(-15.0);
        for u in [0.05, 0.2, 0.7, 1.0, 1.2, 1.6] {
            let (q, _) = adaptive_simpson(|x| m.eval_f(x), 0.0, u, 1e-13);
            assert!((m.primitive(u) - q).abs() < 1e-9);
        }
        let c = cubic();
        let (q, _) = adaptive_simpson(|x| c.eval_f(x), 0.0, 0.8, 1e-14);
        assert!((c.primitive(0.8) - q).abs() < 1e-13);
    }
}
