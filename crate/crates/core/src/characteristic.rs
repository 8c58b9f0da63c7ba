//! Roots of the characteristic quasi-polynomial of the wave equation
//! linearized at `u = 1`,
//!
//! `Δ(λ) = λ²/h² - λ/τ + μ e^{-λ} - 1`,
//!
//! in the strip `S₀ = {Re λ ≤ 0, |Im λ| ≤ 2π}`, the extremal quantity
//! `κ_μ = inf_{S₀ \ {0}} |(1 - μ e^{-λ})/λ²|` with `h_μ = κ_μ^{-1/2}`, and
//! the non-convergence certificate built on an empty strip.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::nonlinearity::NonlinearityModel;
use crate::numeric::nelder_mead_box;

const TWO_PI: f64 = 2.0 * PI;
/// Recursion cap of the contour quadrature.
pub const MAX_DEPTH: u32 = 20;
/// Shift applied to the contour when a root sits on it.
pub const CONTOUR_SHIFT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharParams {
    pub mu: f64,
    pub h: f64,
    pub tau: f64,
}

impl CharParams {
    pub fn new(mu: f64, h: f64, tau: f64) -> Result<Self> {
        if !(h > 0.0) || !(tau > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "characteristic parameters need h > 0, tau > 0 (mu = {mu}, h = {h}, tau = {tau})"
            )));
        }
        Ok(Self { mu, h, tau })
    }

    #[inline]
    pub fn delta(&self, l: Complex64) -> Complex64 {
        l * l / (self.h * self.h) - l / self.tau + self.mu * (-l).exp() - 1.0
    }

    #[inline]
    pub fn delta_prime(&self, l: Complex64) -> Complex64 {
        2.0 * l / (self.h * self.h) - 1.0 / self.tau - self.mu * (-l).exp()
    }

    #[inline]
    fn delta_second(&self, l: Complex64) -> Complex64 {
        2.0 / (self.h * self.h) + self.mu * (-l).exp()
    }

    /// Size of the terms of `Δ(λ)`, used to scale residuals.
    fn scale(&self, l: Complex64) -> f64 {
        1.0 + l.norm_sqr() / (self.h * self.h) + l.norm() / self.tau + (self.mu * (-l).exp()).norm()
    }
}

pub fn delta_eval(l: Complex64, p: &CharParams) -> Complex64 {
    p.delta(l)
}

/// Polynomial part bound `2(|λ|²/h² + |λ|/τ + 1)` on the segment `Re λ = -r`.
fn dominated(p: &CharParams, r: f64) -> bool {
    let m2 = r * r + TWO_PI * TWO_PI;
    p.mu.abs() * r.exp() > 2.0 * (m2 / (p.h * p.h) + m2.sqrt() / p.tau + 1.0)
}

/// Smallest integer `R ≥ 1` such that `|μ e^{-λ}|` dominates the polynomial
/// part on every vertical segment `Re λ = -R'`, `R' ≥ R`, of the strip.
pub fn choose_truncation(p: &CharParams) -> Result<f64> {
    if p.mu == 0.0 {
        return Err(Error::InvalidParameter("mu = 0: roots of the strip are not bounded".into()));
    }
    let mut r = 1.0;
    loop {
        if dominated(p, r) {
            // the exponential wins for good once it wins twice as far out
            let span = r.max(50.0);
            let verified = (1..=(4.0 * span) as usize).all(|k| dominated(p, r + 0.25 * k as f64));
            if verified {
                return Ok(r);
            }
        }
        r += 1.0;
    }
}

/// Axis-aligned rectangle `[re0, re1] × [im0, im1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re1, self.im0),
            Complex64::new(self.re1, self.im1),
            Complex64::new(self.re0, self.im1),
            Complex64::new(self.re0, self.im0),
        ]
    }

    fn grow(&self, d: f64) -> Rect {
        Rect { re0: self.re0 - d, re1: self.re1 + d, im0: self.im0 - d, im1: self.im1 + d }
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }
}

type Moments = [Complex64; 3];

fn add(a: Moments, b: Moments) -> Moments {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: Moments, s: f64) -> Moments {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn diff_norm(a: &Moments, b: &Moments) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).norm()).fold(0.0, f64::max)
}

struct Quad<'a> {
    p: &'a CharParams,
    min_abs: Cell<f64>,
    capped: Cell<bool>,
}

impl Quad<'_> {
    /// `(Δ'/Δ)(λ) · λ^k · dλ/dt` for `k = 0, 1, 2` along `z0 + t (z1 - z0)`.
    fn integrand(&self, z0: Complex64, dz: Complex64, t: f64) -> Moments {
        let l = z0 + dz * t;
        let d = self.p.delta(l);
        let rel = d.norm() / self.p.scale(l);
        if rel < self.min_abs.get() {
            self.min_abs.set(rel);
        }
        let g = self.p.delta_prime(l) / d * dz;
        [g, g * l, g * l * l]
    }

    fn segment(&self, z0: Complex64, z1: Complex64, tol: f64) -> Moments {
        let dz = z1 - z0;
        let fa = self.integrand(z0, dz, 0.0);
        let fm = self.integrand(z0, dz, 0.5);
        let fb = self.integrand(z0, dz, 1.0);
        let whole = scale(add(add(fa, scale(fm, 4.0)), fb), 1.0 / 6.0);
        self.rec(z0, dz, 0.0, 1.0, fa, fm, fb, whole, tol, MAX_DEPTH)
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        z0: Complex64,
        dz: Complex64,
        a: f64,
        b: f64,
        fa: Moments,
        fm: Moments,
        fb: Moments,
        whole: Moments,
        tol: f64,
        depth: u32,
    ) -> Moments {
        let m = 0.5 * (a + b);
        let flm = self.integrand(z0, dz, 0.5 * (a + m));
        let frm = self.integrand(z0, dz, 0.5 * (m + b));
        let w = (b - a) / 12.0;
        let left = scale(add(add(fa, scale(flm, 4.0)), fm), w);
        let right = scale(add(add(fm, scale(frm, 4.0)), fb), w);
        let both = add(left, right);
        let err = diff_norm(&both, &whole);
        if err <= 15.0 * tol {
            return add(both, scale(add(both, scale(whole, -1.0)), 1.0 / 15.0));
        }
        if depth == 0 {
            self.capped.set(true);
            return both;
        }
        add(
            self.rec(z0, dz, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1),
            self.rec(z0, dz, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1),
        )
    }
}

/// Contour integrals `(1/2πi) ∮ λ^k Δ'/Δ dλ`, `k = 0, 1, 2`.
#[derive(Clone, Copy, Debug)]
struct ContourResult {
    moments: Moments,
    winding: i64,
    /// Distance of the raw winding number from the nearest integer.
    defect: f64,
    min_rel_abs: f64,
    capped: bool,
}

fn contour(p: &CharParams, r: &Rect, tol: f64) -> ContourResult {
    let q = Quad { p, min_abs: Cell::new(f64::INFINITY), capped: Cell::new(false) };
    let c = r.corners();
    let mut total = [Complex64::new(0.0, 0.0); 3];
    for k in 0..4 {
        total = add(total, q.segment(c[k], c[(k + 1) % 4], tol));
    }
    let m = scale_c(total, Complex64::new(0.0, -1.0 / TWO_PI));
    let raw = m[0].re;
    ContourResult {
        moments: m,
        winding: raw.round() as i64,
        defect: (raw - raw.round()).abs().max(m[0].im.abs()),
        min_rel_abs: q.min_abs.get(),
        capped: q.capped.get(),
    }
}

fn scale_c(a: Moments, s: Complex64) -> Moments {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// A root with multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub multiplicity: u32,
    /// Found on the boundary `Re λ = 0` or `|Im λ| = 2π`.
    pub on_boundary: bool,
}

impl Root {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripRootReport {
    pub params: CharParams,
    pub roots: Vec<Root>,
    pub winding_count: i64,
    pub truncation_r: f64,
    pub strip: Rect,
    pub kappa_mu: Option<f64>,
    pub h_mu: Option<f64>,
    pub warnings: Vec<String>,
}

impl StripRootReport {
    pub fn multiplicity_sum(&self) -> i64 {
        self.roots.iter().map(|r| r.multiplicity as i64).sum()
    }

    /// Largest number of roots (with multiplicity) sharing one vertical line.
    pub fn max_per_vertical_line(&self) -> u32 {
        let mut best = 0;
        for r in &self.roots {
            let m: u32 = self.roots.iter().filter(|s| (s.re - r.re).abs() < 1e-7).map(|s| s.multiplicity).sum();
            best = best.max(m);
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

const QUAD_TOL: f64 = 1e-10;
const NEAR_ROOT: f64 = 1e-10;

fn newton_polish(p: &CharParams, mut l: Complex64) -> Option<Complex64> {
    for _ in 0..100 {
        let d = p.delta(l);
        let dp = p.delta_prime(l);
        if dp.norm() == 0.0 {
            return None;
        }
        let step = d / dp;
        l -= step;
        if !l.re.is_finite() || !l.im.is_finite() {
            return None;
        }
        if step.norm() < 1e-14 * (1.0 + l.norm()) {
            break;
        }
    }
    (p.delta(l).norm() < 1e-8 * p.scale(l)).then_some(l)
}

/// Double root: `Δ = Δ' = 0`, found by Newton on `Δ'`.
fn double_root(p: &CharParams, mut l: Complex64) -> Option<Complex64> {
    for _ in 0..100 {
        let step = p.delta_prime(l) / p.delta_second(l);
        l -= step;
        if step.norm() < 1e-15 * (1.0 + l.norm()) {
            break;
        }
    }
    (p.delta(l).norm() < 1e-8 * p.scale(l) && l.im.abs() < 1e-8).then_some(Complex64::new(l.re, 0.0))
}

struct Finder<'a> {
    p: &'a CharParams,
    roots: Vec<Complex64Mult>,
    warnings: Vec<String>,
}

#[derive(Clone, Copy)]
struct Complex64Mult(Complex64, u32);

impl Finder<'_> {
    fn search(&mut self, rect: Rect, res: ContourResult, depth: u32) {
        let w = res.winding;
        if w <= 0 {
            return;
        }
        let m = res.moments;
        if w == 1 {
            if let Some(z) = newton_polish(self.p, m[1]).filter(|z| rect.contains(*z, 1e-8)) {
                self.roots.push(Complex64Mult(z, 1));
                return;
            }
        }
        if w == 2 {
            // λ₁ + λ₂ = s₁, λ₁² + λ₂² = s₂
            let s1 = m[1];
            let prod = (s1 * s1 - m[2]) * 0.5;
            let disc = (s1 * s1 - 4.0 * prod).sqrt();
            let (a, b) = ((s1 + disc) * 0.5, (s1 - disc) * 0.5);
            if (a - b).norm() < 1e-4 * (1.0 + a.norm()) {
                if let Some(z) = double_root(self.p, 0.5 * (a + b)) {
                    self.roots.push(Complex64Mult(z, 2));
                    return;
                }
            }
            let (pa, pb) = (newton_polish(self.p, a), newton_polish(self.p, b));
            if let (Some(x), Some(y)) = (pa, pb) {
                if (x - y).norm() > 1e-8 && rect.contains(x, 1e-8) && rect.contains(y, 1e-8) {
                    self.roots.push(Complex64Mult(x, 1));
                    self.roots.push(Complex64Mult(y, 1));
                    return;
                }
            }
        }
        if depth == 0 {
            self.warnings.push(format!("root isolation stopped at depth cap in {rect:?} (winding {w})"));
            return;
        }
        // split the longer side slightly off-center to avoid the symmetry axis
        let split = 0.5 + 0.0371;
        let halves = if rect.re1 - rect.re0 >= rect.im1 - rect.im0 {
            let x = rect.re0 + split * (rect.re1 - rect.re0);
            [Rect { re1: x, ..rect }, Rect { re0: x, ..rect }]
        } else {
            let y = rect.im0 + split * (rect.im1 - rect.im0);
            [Rect { im1: y, ..rect }, Rect { im0: y, ..rect }]
        };
        let results = halves.map(|h| contour(self.p, &h, QUAD_TOL));
        for (h, r) in halves.into_iter().zip(results) {
            self.search(h, r, depth - 1);
        }
    }
}

/// Count the roots of `Δ` in the truncated strip by the argument principle
/// and locate them. Roots on the boundary are included and flagged.
pub fn count_roots_strip(p: &CharParams) -> Result<StripRootReport> {
    if !(p.mu < 0.0) {
        return Err(Error::InvalidParameter(format!("strip count needs mu < 0, got {}", p.mu)));
    }
    let r = choose_truncation(p)?;
    let strip = Rect { re0: -r, re1: 0.0, im0: -TWO_PI, im1: TWO_PI };
    let mut warnings = Vec::new();
    let mut res = contour(p, &strip, QUAD_TOL);
    let mut on_boundary = 0;
    if res.min_rel_abs < NEAR_ROOT || res.defect > 1e-6 {
        // root on or next to the contour: compare slightly larger and smaller strips
        let outer = contour(p, &strip.grow(CONTOUR_SHIFT), QUAD_TOL);
        let inner = contour(p, &strip.grow(-CONTOUR_SHIFT), QUAD_TOL);
        let floor = 1e-13;
        if outer.min_rel_abs < floor && inner.min_rel_abs < floor {
            let z = Complex64::new(0.0, 0.0);
            return Err(Error::ContourThroughRoot { re: z.re, im: z.im });
        }
        on_boundary = (outer.winding - inner.winding).max(0);
        if on_boundary > 0 {
            warnings.push(format!("{on_boundary} root(s) on the strip boundary"));
        }
        res = outer;
    }
    if res.capped {
        warnings.push(format!("contour quadrature hit the depth cap of {MAX_DEPTH}"));
    }
    let search_rect = if on_boundary > 0 { strip.grow(CONTOUR_SHIFT) } else { strip };
    let mut finder = Finder { p, roots: Vec::new(), warnings: Vec::new() };
    finder.search(search_rect, res, 24);
    warnings.append(&mut finder.warnings);
    let roots: Vec<Root> = finder
        .roots
        .into_iter()
        .map(|Complex64Mult(z, m)| Root {
            re: z.re,
            im: z.im,
            multiplicity: m,
            on_boundary: z.re.abs() < 1e-8 || (z.im.abs() - TWO_PI).abs() < 1e-8,
        })
        .collect();
    let report = StripRootReport {
        params: *p,
        roots,
        winding_count: res.winding,
        truncation_r: r,
        strip,
        kappa_mu: None,
        h_mu: None,
        warnings,
    };
    if report.multiplicity_sum() != report.winding_count {
        log::warn!(
            "located {} roots for winding {} at {:?}",
            report.multiplicity_sum(),
            report.winding_count,
            p
        );
    }
    Ok(report)
}

/// `Γ(λ) = |(1 - μ e^{-λ}) / λ²|`.
pub fn gamma(mu: f64, l: Complex64) -> f64 {
    (1.0 - mu * (-l).exp()).norm() / l.norm_sqr()
}

/// `κ_μ` and `h_μ` with the grid step used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa_mu: f64,
    pub h_mu: f64,
    pub argmin_re: f64,
    pub argmin_im: f64,
    pub grid_step: f64,
}

pub const KAPPA_GRID_STEP: f64 = 0.05;
const PUNCTURE: f64 = 1e-3;

pub fn kappa_h_mu(mu: f64) -> Result<KappaResult> {
    kappa_h_mu_with_step(mu, KAPPA_GRID_STEP)
}

/// Grid search over the upper half of the strip (Γ is symmetric under
/// conjugation) followed by Nelder–Mead from the best grid points.
pub fn kappa_h_mu_with_step(mu: f64, step: f64) -> Result<KappaResult> {
    if !(mu < -1.0) {
        return Err(Error::InvalidParameter(format!("kappa_mu needs mu < -1, got {mu}")));
    }
    // Γ ≥ (|μ| e^{R} - 1)/(R² + 4π²) left of -R: truncate once that beats Γ(2πi)
    let reference = gamma(mu, Complex64::new(0.0, TWO_PI));
    let mut r: f64 = 0.5;
    while (mu.abs() * r.exp() - 1.0) / (r * r + TWO_PI * TWO_PI) <= reference {
        r += 0.5;
    }
    let nx = (r / step).ceil() as usize;
    let ny = (TWO_PI / step).ceil() as usize;
    let g = |re: f64, im: f64| {
        let l = Complex64::new(re, im);
        if l.norm() < PUNCTURE {
            f64::INFINITY
        } else {
            gamma(mu, l)
        }
    };
    let rows: Vec<Vec<f64>> = exec::map_range(nx + 1, |i| {
        let re = -r + r * i as f64 / nx as f64;
        (0..=ny).map(|j| g(re, TWO_PI * j as f64 / ny as f64)).collect()
    });
    // local minima of the grid (including edges) as refinement seeds
    let mut seeds: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let v = rows[i][j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && a <= nx as i64 && b <= ny as i64 && rows[a as usize][b as usize] < v {
                    is_min = false;
                }
            }
            if is_min {
                seeds.push((v, i, j));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(8);
    let lo = [-r, 0.0];
    let hi = [0.0, TWO_PI];
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &(_, i, j) in &seeds {
        let start = [-r + r * i as f64 / nx as f64, TWO_PI * j as f64 / ny as f64];
        let (x, v) = nelder_mead_box(|q| g(q[0], q[1]), start, step, lo, hi, 1e-13, 4000);
        if v < best.0 {
            best = (v, x[0], x[1]);
        }
    }
    let kappa = best.0;
    Ok(KappaResult { kappa_mu: kappa, h_mu: kappa.powf(-0.5), argmin_re: best.1, argmin_im: best.2, grid_step: step })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    CertifiedNonconvergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub report: StripRootReport,
}

/// Empty strip at `h = c τ`, `μ = f'(1)` certifies that the wave tail does
/// not converge to 1; roots in the strip prove nothing.
pub fn oscillation_certificate(f: &NonlinearityModel, c: f64, tau: f64) -> Result<Certificate> {
    let mu = f.mu1();
    if !(mu < 0.0) {
        return Err(Error::InvalidParameter(format!("certificate needs f'(1) < 0, got {mu}")));
    }
    let p = CharParams::new(mu, c * tau, tau)?;
    let mut report = count_roots_strip(&p)?;
    if mu < -1.0 {
        let k = kappa_h_mu(mu)?;
        report.kappa_mu = Some(k.kappa_mu);
        report.h_mu = Some(k.h_mu);
    }
    let verdict = if report.winding_count == 0 { Verdict::CertifiedNonconvergent } else { Verdict::Inconclusive };
    Ok(Certificate { verdict, report })
}

/// One row of a `(μ, h, τ)` scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub mu: f64,
    pub h: f64,
    pub tau: f64,
    pub count: i64,
    pub kappa_mu: Option<f64>,
    pub h_mu: Option<f64>,
}

/// Strip counts over the product grid, in `mus × hs × taus` order.
pub fn scan(mus: &[f64], hs: &[f64], taus: &[f64]) -> Result<Vec<ScanRow>> {
    let kappas: Vec<Option<KappaResult>> = exec::map(mus, |&m| kappa_h_mu(m).ok());
    let mut jobs = Vec::new();
    for (k, &mu) in mus.iter().enumerate() {
        for &h in hs {
            for &tau in taus {
                jobs.push((k, mu, h, tau));
            }
        }
    }
    exec::map(&jobs, |&(k, mu, h, tau)| {
        let p = CharParams::new(mu, h, tau)?;
        let rep = count_roots_strip(&p)?;
        Ok(ScanRow {
            mu,
            h,
            tau,
            count: rep.winding_count,
            kappa_mu: kappas[k].map(|x| x.kappa_mu),
            h_mu: kappas[k].map(|x| x.h_mu),
        })
    })
    .into_iter()
    .collect()
}

/// First empty-strip `τ`, if any, and every tried `(τ, count)`.
pub type TauScan = (Option<f64>, Vec<(f64, i64)>);

/// First `τ = tau0 · factor^k ≤ cap` at which the strip is empty for
/// `h = h_μ + eps`, with every tried `(τ, count)`.
pub fn tau_epsilon_scan(mu: f64, eps: f64, tau0: f64, factor: f64, cap: f64) -> Result<TauScan> {
    let k = kappa_h_mu(mu)?;
    let h = k.h_mu + eps;
    let mut tau = tau0;
    let mut tried = Vec::new();
    while tau <= cap * (1.0 + 1e-12) {
        let rep = count_roots_strip(&CharParams::new(mu, h, tau)?)?;
        tried.push((tau, rep.winding_count));
        if rep.winding_count == 0 {
            return Ok((Some(tau), tried));
        }
        tau *= factor;
    }
    Ok((None, tried))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn delta_values() {
        let p = CharParams::new(-2.0, 1.0, 1.0).unwrap();
        assert_eq!(p.delta(c(0.0, 0.0)), c(-3.0, 0.0));
        let v = p.delta(c(0.0, PI));
        assert_abs_diff_eq!(v.re, 1.0 - PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, -PI, epsilon = 1e-12);
        let q = CharParams::new(0.0, 2.0, 0.5).unwrap();
        let x = 1.7;
        assert_abs_diff_eq!(q.delta(c(x, 0.0)).re, x * x / 4.0 - 2.0 * x - 1.0, epsilon = 1e-14);
        assert!(p.delta(c(-700.0, 1.0)).re.is_finite());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = CharParams::new(-7.0, 0.6, 3.0).unwrap();
        for l in [c(-1.0, 2.0), c(-0.3, -5.0), c(-4.0, 0.1)] {
            let e = 1e-6;
            let fd = (p.delta(l + e) - p.delta(l - e)) / (2.0 * e);
            assert!((fd - p.delta_prime(l)).norm() < 1e-6 * (1.0 + fd.norm()));
        }
    }

    #[test]
    fn truncation_examples() {
        let r = choose_truncation(&CharParams::new(-5.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(r <= 20.0);
        let r = choose_truncation(&CharParams::new(-1e6, 1.0, 1.0).unwrap()).unwrap();
        assert!(r <= 3.0);
        assert!(choose_truncation(&CharParams::new(0.0, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn report_is_consistent() {
        let p = CharParams::new(-2.0, 0.1, 10.0).unwrap();
        let rep = count_roots_strip(&p).unwrap();
        assert_eq!(rep.multiplicity_sum(), rep.winding_count);
        for r in &rep.roots {
            let z = r.value();
            assert!(p.delta(z).norm() < 1e-8 * p.scale(z));
            assert!(rep.roots.iter().any(|s| (s.value() - z.conj()).norm() < 1e-8));
        }
        assert!(rep.max_per_vertical_line() <= 2);
    }

    #[test]
    fn winding_is_nearly_integer() {
        let p = CharParams::new(-12.0, 0.8, 4.0).unwrap();
        let r = choose_truncation(&p).unwrap();
        let res = contour(&p, &Rect { re0: -r, re1: 0.0, im0: -TWO_PI, im1: TWO_PI }, QUAD_TOL);
        assert!(res.defect < 1e-6);
    }

    #[test]
    fn kappa_at_minus_ten_is_near_the_corner() {
        let k = kappa_h_mu(-10.0).unwrap();
        assert!(k.kappa_mu > 0.0 && k.kappa_mu <= 11.0 / (TWO_PI * TWO_PI) + 1e-12);
        assert_abs_diff_eq!(k.h_mu, k.kappa_mu.powf(-0.5), epsilon = 1e-15);
        assert!(kappa_h_mu(-0.5).is_err());
    }

    #[test]
    fn large_shift_and_delay_empty_the_strip() {
        let mu = -20.0;
        let k = kappa_h_mu(mu).unwrap();
        let rep = count_roots_strip(&CharParams::new(mu, k.h_mu + 0.5, 200.0).unwrap()).unwrap();
        assert_eq!(rep.winding_count, 0);
    }

    #[test]
    fn certificate_rejects_nonnegative_slope() {
        let f = NonlinearityModel::cubic_shift(0.5, 0.25).unwrap();
        assert!(f.mu1() > 0.0);
        assert!(oscillation_certificate(&f, 0.3, 1.0).is_err());
    }

    #[test]
    fn verdict_serializes_in_screaming_case() {
        let s = serde_json::to_string(&Verdict::CertifiedNonconvergent).unwrap();
        assert_eq!(s, "\"CERTIFIED_NONCONVERGENT\"");
    }
}
