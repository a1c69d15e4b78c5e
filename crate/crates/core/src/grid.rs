//! Torus geometry and real sample fields.
//!
//! The torus is `[-π·Lx, π·Lx) × [-π·Ly, π·Ly)` sampled uniformly with
//! `Nx × Ny` points. Samples are stored row-major with `x` as the outer
//! (slow) index, so sample `(i, j)` lives at `i * ny + j`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic rectangle with power-of-two resolution in each direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    /// `lx`, `ly` are half-period scales: the physical periods are `2π·lx`, `2π·ly`.
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        for (name, v) in [("Lx", lx), ("Ly", ly)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, n) in [("Nx", nx), ("Ny", ny)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("{name} must be a power of two >= 2, got {n}")));
            }
        }
        Ok(Self { lx, ly, nx, ny })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI * self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn period_x(&self) -> f64 {
        2.0 * PI * self.lx
    }

    pub fn period_y(&self) -> f64 {
        2.0 * PI * self.ly
    }

    pub fn area(&self) -> f64 {
        self.period_x() * self.period_y()
    }

    pub fn x(&self, i: usize) -> f64 {
        -PI * self.lx + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -PI * self.ly + j as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    /// Signed integer wavenumber index for FFT bin `i` of an `n`-point
    /// transform, in `{-n/2+1, ..., n/2}`.
    #[inline]
    pub(crate) fn signed_index(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Physical x-wavenumber of bin `i`.
    pub fn kx(&self, i: usize) -> f64 {
        Self::signed_index(i, self.nx) as f64 / self.lx
    }

    /// Physical y-wavenumber of half-spectrum bin `j` (`0 ..= ny/2`).
    pub fn ky(&self, j: usize) -> f64 {
        j as f64 / self.ly
    }

    /// Number of stored y-bins of the real-to-complex spectrum.
    pub fn ny_half(&self) -> usize {
        self.ny / 2 + 1
    }

    pub fn spectral_len(&self) -> usize {
        self.nx * self.ny_half()
    }

    /// Wrap a coordinate into `[-π·L, π·L)`.
    pub fn wrap_x(&self, x: f64) -> f64 {
        wrap(x, self.lx)
    }

    pub fn wrap_y(&self, y: f64) -> f64 {
        wrap(y, self.ly)
    }

    /// Minimum-image periodic distance between two points.
    pub fn periodic_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let dx = self.wrap_x(a.0 - b.0);
        let dy = self.wrap_y(a.1 - b.1);
        dx.hypot(dy)
    }

    /// Same extent, scaled by `1/lambda` in both directions.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.lx / lambda, self.ly / lambda, self.nx, self.ny)
    }
}

fn wrap(v: f64, half_scale: f64) -> f64 {
    let period = 2.0 * PI * half_scale;
    let shifted = (v + PI * half_scale).rem_euclid(period);
    let w = shifted - PI * half_scale;
    // rem_euclid can return `period` itself for tiny negative inputs
    if w >= PI * half_scale {
        w - period
    } else {
        w
    }
}

/// Real scalar samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x, y)` at every grid point.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let xs = grid.xs();
        let ys = grid.ys();
        let mut values = Vec::with_capacity(grid.len());
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn from_fn_indexed(grid: Grid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Index of the first non-finite sample, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            None => Ok(()),
            Some(idx) => Err(Error::NonFinite {
                index: idx,
                i: idx / self.grid.ny,
                j: idx % self.grid.ny,
            }),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Sup-norm of the difference with another field on the same grid.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Average over `y` for each `x` row.
    pub fn y_average(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.grid.ny)
            .map(|row| row.iter().sum::<f64>() / self.grid.ny as f64)
            .collect()
    }
}
