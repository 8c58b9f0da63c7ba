//! Small numerical kernels shared by the solver modules: adaptive quadrature,
//! scalar searches, a banded LU, least-squares line fits and a bounded
//! Nelder–Mead for two-dimensional minimization.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature. Returns `(value, estimated_error)`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let val = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 48, &mut err);
    (val, err)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Dense scan of `f` on `[lo, hi]` with `n` intervals, refined by golden
/// section in the bracket around the best sample. Returns `(argmax, max)`.
pub fn scan_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let step = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..=n {
        let x = if i == n { hi } else { lo + i as f64 * step };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = golden_max(&f, a, b, 1e-12 * (1.0 + hi.abs()));
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Square band matrix with `lower` sub-diagonals and `upper`
/// super-diagonals, stored row by row.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.upper);
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper || j >= self.n {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU factorization without pivoting. Fill stays inside the band.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for k in 0..n {
            let pivot = self.data[self.idx(k, k)];
            if pivot.abs() <= 1e-14 * scale {
                return Err(Error::SingularPivot { row: k });
            }
            let i_end = (k + self.lower).min(n - 1);
            let j_end = (k + self.upper).min(n - 1);
            for i in k + 1..=i_end {
                let ik = self.idx(i, k);
                let l = self.data[ik];
                if l == 0.0 {
                    continue;
                }
                let l = l / pivot;
                self.data[ik] = l;
                for j in k + 1..=j_end {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(m.lower);
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(i).skip(lo) {
                s -= m.data[m.idx(i, j)] * xj;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + m.upper).min(n - 1);
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(i + 1) {
                s -= m.data[m.idx(i, j)] * xj;
            }
            x[i] = s / m.data[m.idx(i, i)];
        }
        x
    }
}

/// Solve a tridiagonal system (Thomas algorithm). `sub[0]` and
/// `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = sup[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / beta } else { 0.0 };
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Nelder–Mead on a box `[lo, hi]` (points are clamped into the box).
pub fn nelder_mead_box<F: Fn([f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    step: f64,
    lo: [f64; 2],
    hi: [f64; 2],
    tol: f64,
    max_evals: usize,
) -> ([f64; 2], f64) {
    let clamp = |p: [f64; 2]| [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])];
    let eval = |p: [f64; 2]| f(clamp(p));
    let mut simplex = [
        clamp(start),
        clamp([start[0] + step, start[1]]),
        clamp([start[0], start[1] + step]),
    ];
    // Degenerate simplex at a corner: step inward instead.
    if simplex[1] == simplex[0] {
        simplex[1] = clamp([start[0] - step, start[1]]);
    }
    if simplex[2] == simplex[0] {
        simplex[2] = clamp([start[0], start[1] - step]);
    }
    let mut vals = simplex.map(eval);
    let mut evals = 3;
    while evals < max_evals {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (b, m, w) = (order[0], order[1], order[2]);
        let spread = (vals[w] - vals[b]).abs();
        let size = (0..3)
            .map(|k| {
                let d0 = simplex[k][0] - simplex[b][0];
                let d1 = simplex[k][1] - simplex[b][1];
                (d0 * d0 + d1 * d1).sqrt()
            })
            .fold(0.0, f64::max);
        if size < tol && spread <= tol * (1.0 + vals[b].abs()) {
            break;
        }
        let cen = [
            0.5 * (simplex[b][0] + simplex[m][0]),
            0.5 * (simplex[b][1] + simplex[m][1]),
        ];
        let along = |t: f64| {
            clamp([
                cen[0] + t * (simplex[w][0] - cen[0]),
                cen[1] + t * (simplex[w][1] - cen[1]),
            ])
        };
        let r = along(-1.0);
        let fr = eval(r);
        evals += 1;
        if fr < vals[b] {
            let e = along(-2.0);
            let fe = eval(e);
            evals += 1;
            if fe < fr {
                simplex[w] = e;
                vals[w] = fe;
            } else {
                simplex[w] = r;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = r;
            vals[w] = fr;
        } else {
            let c = if fr < vals[w] { along(-0.5) } else { along(0.5) };
            let fc = eval(c);
            evals += 1;
            if fc < vals[w].min(fr) {
                simplex[w] = c;
                vals[w] = fc;
            } else {
                for k in [m, w] {
                    simplex[k] = clamp([
                        simplex[b][0] + 0.5 * (simplex[k][0] - simplex[b][0]),
                        simplex[b][1] + 0.5 * (simplex[k][1] - simplex[b][1]),
                    ]);
                    vals[k] = eval(simplex[k]);
                    evals += 1;
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (clamp(simplex[best]), vals[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let (v, _) = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-12);
        let (v, _) = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn banded_lu_matches_dense_solution() {
        // tridiagonal + a band at offset -4
        let n = 12;
        let mut m = BandMatrix::zeros(n, 5, 1);
        for i in 0..n {
            m.add(i, i, 4.0 + i as f64 * 0.1);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.2);
            }
            if i >= 5 {
                m.add(i, i - 5, 0.3);
                m.add(i, i - 4, -0.7);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = m.mul_vec(&x_true);
        let x = m.factor().unwrap().solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_solves_poisson() {
        let n = 5;
        let sub = vec![-1.0; n];
        let sup = vec![-1.0; n];
        let diag = vec![2.0; n];
        let x_true = [1.0, 2.0, 3.0, 2.0, 1.0];
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                2.0 * x_true[i]
                    - if i > 0 { x_true[i - 1] } else { 0.0 }
                    - if i + 1 < n { x_true[i + 1] } else { 0.0 }
            })
            .collect();
        solve_tridiagonal(&sub, &diag, &sup, &mut rhs);
        for (a, b) in rhs.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_and_scan_find_parabola_peak() {
        let (x, v) = scan_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 64);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_finds_box_constrained_minimum() {
        let (p, v) = nelder_mead_box(
            |p| (p[0] - 2.0).powi(2) + (p[1] + 1.0).powi(2),
            [0.0, 0.0],
            0.5,
            [-1.0, -0.5],
            [1.0, 1.0],
            1e-10,
            2000,
        );
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] + 0.5).abs() < 1e-6);
        assert!((v - 1.25).abs() < 1e-9);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
