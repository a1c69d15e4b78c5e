//! Evaluation of the trigonometric interpolant of a sampled field at
//! arbitrary points.
//!
//! Nyquist modes are split symmetrically, i.e. treated as `cos(k_N s)`, so
//! the interpolant is real and reproduces the samples at grid points.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{SpectralField, SpectralPlan};
use crate::error::Result;
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDerivatives {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralInterpolant {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

/// `d`-th derivative of the basis function for signed mode `m` at offset
/// `s` from the first sample.
fn basis(m: i64, nyquist: bool, half_scale: f64, s: f64, order: u32) -> Complex64 {
    let k = m as f64 / half_scale;
    let theta = k * s;
    if nyquist {
        let (sin, cos) = theta.sin_cos();
        let v = match order {
            0 => cos,
            1 => -k * sin,
            2 => -k * k * cos,
            _ => k * k * k * sin,
        };
        Complex64::new(v, 0.0)
    } else {
        Complex64::new(0.0, k).powu(order) * Complex64::cis(theta)
    }
}

impl SpectralInterpolant {
    pub fn new(s: &SpectralField) -> Self {
        Self {
            grid: *s.grid(),
            coeffs: s.coeffs().to_vec(),
        }
    }

    pub fn from_field(f: &Field) -> Result<Self> {
        let s = SpectralPlan::new(*f.grid()).forward(f)?;
        Ok(Self::new(&s))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn x_basis(&self, x: f64, order: u32) -> Vec<Complex64> {
        let g = &self.grid;
        let s = x + PI * g.lx();
        (0..g.nx())
            .map(|i| basis(Grid::signed_index(i, g.nx()), i == g.nx() / 2, g.lx(), s, order))
            .collect()
    }

    /// y-basis with the conjugate-pair weight folded in.
    fn y_basis(&self, y: f64, order: u32) -> Vec<Complex64> {
        let g = &self.grid;
        let s = y + PI * g.ly();
        let nyq = g.ny() / 2;
        (0..g.ny_half())
            .map(|j| {
                let w = if j == 0 || j == nyq { 1.0 } else { 2.0 };
                w * basis(j as i64, j == nyq, g.ly(), s, order)
            })
            .collect()
    }

    fn row_sums(&self, bx: &[Complex64]) -> Vec<Complex64> {
        let nx = self.grid.nx();
        self.coeffs
            .chunks_exact(nx)
            .map(|row| row.iter().zip(bx).map(|(c, b)| c * b).sum())
            .collect()
    }

    fn contract(sums: &[Complex64], by: &[Complex64]) -> f64 {
        sums.iter().zip(by).map(|(s, b)| (s * b).re).sum()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let s0 = self.row_sums(&self.x_basis(x, 0));
        Self::contract(&s0, &self.y_basis(y, 0))
    }

    pub fn derivatives(&self, x: f64, y: f64) -> PointDerivatives {
        let s0 = self.row_sums(&self.x_basis(x, 0));
        let s1 = self.row_sums(&self.x_basis(x, 1));
        let s2 = self.row_sums(&self.x_basis(x, 2));
        let b0 = self.y_basis(y, 0);
        let b1 = self.y_basis(y, 1);
        let b2 = self.y_basis(y, 2);
        PointDerivatives {
            value: Self::contract(&s0, &b0),
            dx: Self::contract(&s1, &b0),
            dy: Self::contract(&s0, &b1),
            dxx: Self::contract(&s2, &b0),
            dxy: Self::contract(&s1, &b1),
            dyy: Self::contract(&s0, &b2),
        }
    }

    /// Values on the tensor grid `xs × ys`, `x` as the outer index.
    pub fn eval_tensor(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let nyh = self.grid.ny_half();
        // sums[ti * nyh + j] = Σ_i c[j][i] bx_i(xs[ti])
        let mut sums = Vec::with_capacity(xs.len() * nyh);
        for &x in xs {
            sums.extend(self.row_sums(&self.x_basis(x, 0)));
        }
        let ybases: Vec<Vec<Complex64>> = ys.iter().map(|&y| self.y_basis(y, 0)).collect();
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for srow in sums.chunks_exact(nyh) {
            for by in &ybases {
                out.push(Self::contract(srow, by));
            }
        }
        out
    }

    /// Newton ascent on the interpolant from `(x, y)`. Steps are capped at
    /// `max_step` per axis; the start point is returned if the iteration does
    /// not improve on it.
    pub fn refine_max(&self, x: f64, y: f64, max_step: (f64, f64)) -> (f64, f64, f64) {
        let start = self.derivatives(x, y);
        let (mut px, mut py) = (x, y);
        let mut d = start;
        for _ in 0..50 {
            let det = d.dxx * d.dyy - d.dxy * d.dxy;
            let (mut sx, mut sy) = if d.dxx < 0.0 && det > 0.0 {
                (
                    -(d.dyy * d.dx - d.dxy * d.dy) / det,
                    -(d.dxx * d.dy - d.dxy * d.dx) / det,
                )
            } else {
                (0.0, 0.0)
            };
            sx = sx.clamp(-max_step.0, max_step.0);
            sy = sy.clamp(-max_step.1, max_step.1);
            if sx == 0.0 && sy == 0.0 {
                break;
            }
            px += sx;
            py += sy;
            d = self.derivatives(px, py);
            if sx.abs() < 1e-14 * self.grid.dx() && sy.abs() < 1e-14 * self.grid.dy() {
                break;
            }
        }
        if d.value >= start.value && (px - x).abs() <= 2.0 * self.grid.dx() && (py - y).abs() <= 2.0 * self.grid.dy() {
            (d.value, self.grid.wrap_x(px), self.grid.wrap_y(py))
        } else {
            (start.value, self.grid.wrap_x(x), self.grid.wrap_y(y))
        }
    }
}
