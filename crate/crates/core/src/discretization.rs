//! Uniform grids on `[-a, a]`, pinned profiles, and the finite-difference
//! residual of the box problem with a shifted, extended argument.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Reaction;

/// Boundary pins are checked to this accuracy on construction.
pub const PIN_TOL: f64 = 1e-12;

/// Uniform grid with `n` interior nodes on `[-a, a]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(a: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || n < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs a > 0 and n >= 3 (a = {a}, n = {n})"
            )));
        }
        Ok(Self { a, n, dx: 2.0 * a / (n + 1) as f64 })
    }

    /// Grid on `[-a, a]` whose spacing is as close as possible to `dx`.
    pub fn with_spacing(a: f64, dx: f64) -> Result<Self> {
        let n = ((2.0 * a / dx).round() as usize).saturating_sub(1);
        Self::new(a, n)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Node `x_i`, `i = 0..=n+1`; the endpoints are exact.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n + 1 {
            self.a
        } else {
            -self.a + i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n + 2).map(|i| self.x(i)).collect()
    }

    /// Interpolation stencil of `x`: node `i` and the weight of node `i + 1`.
    #[inline]
    pub fn locate(&self, x: f64) -> Stencil {
        if x <= -self.a {
            return Stencil::Below;
        }
        if x >= self.a {
            return Stencil::Above;
        }
        let t = (x + self.a) / self.dx;
        let r = t.round();
        // snap to nodes within rounding of the division
        let t = if (t - r).abs() < 1e-9 { r } else { t };
        let i = (t.floor() as usize).min(self.n);
        Stencil::Cell(i, t - i as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stencil {
    Below,
    Above,
    Cell(usize, f64),
}

/// `ū(x)` for raw node values on `grid`.
#[inline]
#[allow(clippy::redundant_guards)]
pub fn sample_values(grid: &Grid, values: &[f64], x: f64) -> f64 {
    match grid.locate(x) {
        Stencil::Below => 0.0,
        Stencil::Above => 1.0,
        // w = 0 at the last node, which has no right neighbour
        Stencil::Cell(i, w) if w == 0.0 => values[i],
        Stencil::Cell(i, w) => (1.0 - w) * values[i] + w * values[i + 1],
    }
}

/// Grid values with `u(-a) = 0` and `u(a) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    grid: Grid,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n + 2 {
            return Err(Error::InvalidParameter(format!(
                "profile needs {} values, got {}",
                grid.n + 2,
                values.len()
            )));
        }
        let (left, right) = (values[0], values[grid.n + 1]);
        if left.abs() > PIN_TOL || (right - 1.0).abs() > PIN_TOL {
            return Err(Error::BoundaryPins { left, right });
        }
        let mut values = values;
        values[0] = 0.0;
        values[grid.n + 1] = 1.0;
        Ok(Self { grid, values })
    }

    /// Profile from interior values; the pins are added.
    pub fn from_interior(grid: Grid, interior: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(1.0);
        Self::new(grid, values)
    }

    /// Sample `g` at the interior nodes.
    pub fn from_fn(grid: Grid, g: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = (0..grid.n + 2).map(|i| g(grid.x(i))).collect();
        values[0] = 0.0;
        values[grid.n + 1] = 1.0;
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..=self.grid.n]
    }

    /// `ū(x)`: `0` left of the box, `1` right of it, piecewise linear inside.
    #[inline]
    pub fn shifted_sample(&self, x: f64) -> f64 {
        sample_values(&self.grid, &self.values, x)
    }

    /// Resample on another grid using the extension outside `[-a, a]`.
    pub fn resample(&self, grid: Grid) -> Self {
        Self::from_fn(grid, |x| self.shifted_sample(x))
    }

    /// Profile translated so that the old point `shift` becomes the origin:
    /// `u_new(x) = ū(x + shift)`.
    pub fn translated(&self, shift: f64) -> Self {
        Self::from_fn(self.grid, |x| self.shifted_sample(x + shift))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "u"])?;
        for (i, u) in self.values.iter().enumerate() {
            w.write_record([self.grid.x(i).to_string(), u.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Load `(x, u)` rows written by [`Profile::write_csv`]; the grid is
    /// rebuilt from the row count and the pins are re-validated.
    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for rec in r.deserialize() {
            let (x, u): (f64, f64) = rec?;
            xs.push(x);
            us.push(u);
        }
        if xs.len() < 5 {
            return Err(Error::InvalidParameter("profile CSV needs at least 5 rows".into()));
        }
        let a = xs[xs.len() - 1];
        if (xs[0] + a).abs() > 1e-9 * a.max(1.0) {
            return Err(Error::InvalidParameter("profile CSV is not symmetric about 0".into()));
        }
        let grid = Grid::new(a, xs.len() - 2)?;
        Self::new(grid, us)
    }
}

/// Difference scheme for the first derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advection {
    #[default]
    Centered,
    /// One-sided in the upwind direction of `c u'`.
    Upwind,
}

/// Residual of `-u'' + c u' - f(ū(x - s)) + u` at the interior nodes.
pub fn apply_operator<R: Reaction + ?Sized>(p: &Profile, c: f64, s: f64, f: &R) -> Vec<f64> {
    apply_operator_with(p, c, s, f, Advection::Centered)
}

pub fn apply_operator_with<R: Reaction + ?Sized>(
    p: &Profile,
    c: f64,
    s: f64,
    f: &R,
    scheme: Advection,
) -> Vec<f64> {
    residual_values(&p.grid, &p.values, c, s, f, scheme)
}

/// [`apply_operator_with`] on raw node values (pins included).
pub fn residual_values<R: Reaction + ?Sized>(
    g: &Grid,
    u: &[f64],
    c: f64,
    s: f64,
    f: &R,
    scheme: Advection,
) -> Vec<f64> {
    let dx = g.dx;
    let inv_dx2 = 1.0 / (dx * dx);
    (1..=g.n)
        .map(|i| {
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2;
            let d1 = first_difference(u, i, dx, c, scheme);
            let delayed = if s == 0.0 { u[i] } else { sample_values(g, u, g.x(i) - s) };
            -d2 + c * d1 - f.f(delayed) + u[i]
        })
        .collect()
}

#[inline]
pub(crate) fn first_difference(u: &[f64], i: usize, dx: f64, c: f64, scheme: Advection) -> f64 {
    match scheme {
        Advection::Centered => (u[i + 1] - u[i - 1]) / (2.0 * dx),
        // c u' with c > 0 transports information from the right
        Advection::Upwind if c >= 0.0 => (u[i + 1] - u[i]) / dx,
        Advection::Upwind => (u[i] - u[i - 1]) / dx,
    }
}
