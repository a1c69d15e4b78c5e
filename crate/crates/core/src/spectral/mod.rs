//! Real ↔ spectral transforms on the torus and spectral operators.
//!
//! The forward transform carries the `1/(Nx·Ny)` factor, so the zero mode is
//! the mean of the field. Only the non-negative half of the `y` spectrum is
//! stored (real input); coefficients are laid out `ky`-major, i.e. bin
//! `(i, j)` (x-bin `i`, y-bin `j`) lives at `j * nx + i`.

mod interp;

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub use interp::{PointDerivatives, SpectralInterpolant};

/// Half-spectrum coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.nx() * grid.ny_half()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = grid.nx() * grid.ny_half();
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of x-bin `i` and y-bin `j` (`j <= ny/2`).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[j * self.grid.nx() + i]
    }

    /// Coefficient for signed integer mode indices, using conjugate
    /// symmetry for negative `my`.
    pub fn mode(&self, mx: i64, my: i64) -> Complex64 {
        let nx = self.grid.nx() as i64;
        let ny = self.grid.ny() as i64;
        let i = mx.rem_euclid(nx) as usize;
        let j = my.rem_euclid(ny);
        if j <= ny / 2 {
            self.get(i, j as usize)
        } else {
            let ic = (-mx).rem_euclid(nx) as usize;
            self.get(ic, (ny - j) as usize).conj()
        }
    }

    /// `Σ |û|²` over the full spectrum, i.e. the mean of `u²`.
    pub fn mean_square(&self) -> f64 {
        weighted_sum(&self.grid, &self.coeffs, |c| c.norm_sqr())
    }

    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// Ratio of the largest coefficient in the top tenth of mode indices
    /// (in either direction) to the largest coefficient overall.
    pub fn tail_ratio(&self) -> f64 {
        let g = self.grid;
        let (nx, nyh) = (g.nx(), g.ny_half());
        let hx = (g.nx() / 2) as i64;
        let hy = (g.ny() / 2) as i64;
        let mut all = 0.0_f64;
        let mut tail = 0.0_f64;
        for j in 0..nyh {
            let y_tail = 10 * j as i64 > 9 * hy;
            for i in 0..nx {
                let m = self.coeffs[j * nx + i].norm();
                all = all.max(m);
                let mx = Grid::signed_index(i, nx).abs();
                if y_tail || 10 * mx > 9 * hx {
                    tail = tail.max(m);
                }
            }
        }
        if all == 0.0 {
            0.0
        } else {
            tail / all
        }
    }
}

/// `Σ_j w_j Σ_i f(c)` with weight 2 for y-bins that stand for a conjugate
/// pair and 1 for the zero and Nyquist y-bins.
pub(crate) fn weighted_sum(grid: &Grid, coeffs: &[Complex64], f: impl Fn(Complex64) -> f64) -> f64 {
    let nx = grid.nx();
    let nyh = grid.ny_half();
    let mut total = 0.0;
    for j in 0..nyh {
        let w = if j == 0 || j == nyh - 1 { 1.0 } else { 2.0 };
        let row: f64 = coeffs[j * nx..(j + 1) * nx].iter().map(|&c| f(c)).sum();
        total += w * row;
    }
    total
}

/// Cached FFT plans and scratch buffers for one grid.
pub struct SpectralPlan {
    grid: Grid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    row_real: Vec<f64>,
    row_spec: Vec<Complex64>,
    real_scratch: Vec<Complex64>,
    x_scratch: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("grid", &self.grid).finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: Grid) -> Self {
        let mut real_planner = RealFftPlanner::<f64>::new();
        let r2c = real_planner.plan_fft_forward(grid.ny());
        let c2r = real_planner.plan_fft_inverse(grid.ny());
        let mut planner = FftPlanner::<f64>::new();
        let fwd_x = planner.plan_fft_forward(grid.nx());
        let inv_x = planner.plan_fft_inverse(grid.nx());
        let real_scratch_len = r2c.get_scratch_len().max(c2r.get_scratch_len());
        let x_scratch_len = fwd_x
            .get_inplace_scratch_len()
            .max(inv_x.get_inplace_scratch_len());
        let zero = Complex64::new(0.0, 0.0);
        Self {
            grid,
            row_real: vec![0.0; grid.ny()],
            row_spec: vec![zero; grid.ny_half()],
            real_scratch: vec![zero; real_scratch_len],
            x_scratch: vec![zero; x_scratch_len],
            work: vec![zero; grid.nx() * grid.ny_half()],
            r2c,
            c2r,
            fwd_x,
            inv_x,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Forward transform of raw samples into `out` (no finiteness check).
    pub fn forward_into(&mut self, values: &[f64], out: &mut [Complex64]) {
        let (nx, ny, nyh) = (self.grid.nx(), self.grid.ny(), self.grid.ny_half());
        debug_assert_eq!(values.len(), nx * ny);
        debug_assert_eq!(out.len(), nx * nyh);
        let norm = 1.0 / (nx * ny) as f64;
        for (i, row) in values.chunks_exact(ny).enumerate() {
            self.row_real.copy_from_slice(row);
            self.r2c
                .process_with_scratch(&mut self.row_real, &mut self.row_spec, &mut self.real_scratch)
                .expect("buffer sizes fixed at plan time");
            for (j, c) in self.row_spec.iter().enumerate() {
                out[j * nx + i] = c * norm;
            }
        }
        self.fwd_x.process_with_scratch(out, &mut self.x_scratch);
    }

    /// Inverse transform of half-spectrum coefficients into `out`.
    pub fn inverse_into(&mut self, coeffs: &[Complex64], out: &mut [f64]) {
        let (nx, ny, nyh) = (self.grid.nx(), self.grid.ny(), self.grid.ny_half());
        debug_assert_eq!(coeffs.len(), nx * nyh);
        debug_assert_eq!(out.len(), nx * ny);
        self.work.copy_from_slice(coeffs);
        self.inv_x.process_with_scratch(&mut self.work, &mut self.x_scratch);
        for (i, row) in out.chunks_exact_mut(ny).enumerate() {
            for j in 0..nyh {
                self.row_spec[j] = self.work[j * nx + i];
            }
            // the zero and Nyquist y-bins are real for a real field
            self.row_spec[0].im = 0.0;
            self.row_spec[nyh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut self.row_spec, row, &mut self.real_scratch)
                .expect("buffer sizes fixed at plan time");
        }
    }

    pub fn forward(&mut self, f: &Field) -> Result<SpectralField> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        f.ensure_finite()?;
        let mut out = SpectralField::zeros(self.grid);
        self.forward_into(f.values(), &mut out.coeffs);
        Ok(out)
    }

    pub fn inverse(&mut self, s: &SpectralField) -> Result<Field> {
        if *s.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = Field::zeros(self.grid);
        self.inverse_into(&s.coeffs, out.values_mut());
        Ok(out)
    }
}

/// One-shot forward transform; rejects non-finite input.
pub fn forward_transform(f: &Field) -> Result<SpectralField> {
    SpectralPlan::new(*f.grid()).forward(f)
}

pub fn inverse_transform(s: &SpectralField) -> Field {
    SpectralPlan::new(*s.grid())
        .inverse(s)
        .expect("plan built for the same grid")
}

/// Multiplier `(i·kx)^ox (i·ky)^oy` per stored mode. For odd orders the
/// Nyquist wavenumber is replaced by zero.
pub fn derivative_multiplier(grid: &Grid, order_x: u32, order_y: u32) -> Vec<Complex64> {
    let (nx, nyh) = (grid.nx(), grid.ny_half());
    let i_unit = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(nx * nyh);
    for j in 0..nyh {
        let ky = if order_y % 2 == 1 && j == grid.ny() / 2 {
            0.0
        } else {
            grid.ky(j)
        };
        let fy = (i_unit * ky).powu(order_y);
        for i in 0..nx {
            let kx = if order_x % 2 == 1 && i == nx / 2 { 0.0 } else { grid.kx(i) };
            out.push((i_unit * kx).powu(order_x) * fy);
        }
    }
    out
}

pub fn spectral_derivative(f: &SpectralField, order_x: u32, order_y: u32) -> Result<SpectralField> {
    if order_x > 3 || order_y > 3 {
        return Err(Error::InvalidParameter(format!(
            "derivative orders must be <= 3, got ({order_x}, {order_y})"
        )));
    }
    let mult = derivative_multiplier(f.grid(), order_x, order_y);
    let coeffs = f.coeffs.iter().zip(&mult).map(|(c, m)| c * m).collect();
    Ok(SpectralField {
        grid: f.grid,
        coeffs,
    })
}

/// `-Δ` multiplier `kx² + ky²` per stored mode.
pub fn laplacian_symbol(grid: &Grid) -> Vec<f64> {
    let (nx, nyh) = (grid.nx(), grid.ny_half());
    let mut out = Vec::with_capacity(nx * nyh);
    for j in 0..nyh {
        let ky = grid.ky(j);
        for i in 0..nx {
            let kx = grid.kx(i);
            out.push(kx * kx + ky * ky);
        }
    }
    out
}

/// 2/3-rule mask: `true` for modes kept.
pub fn dealias_mask(grid: &Grid) -> Vec<bool> {
    let (nx, ny, nyh) = (grid.nx(), grid.ny(), grid.ny_half());
    let mut out = Vec::with_capacity(nx * nyh);
    for j in 0..nyh {
        let keep_y = 3 * j <= ny;
        for i in 0..nx {
            let mx = Grid::signed_index(i, nx).unsigned_abs() as usize;
            out.push(keep_y && 3 * mx <= nx);
        }
    }
    out
}

/// Zero every mode with `|index| > N/3` in either direction when `enabled`.
pub fn dealias(f: &SpectralField, enabled: bool) -> SpectralField {
    if !enabled {
        return f.clone();
    }
    let mask = dealias_mask(f.grid());
    let zero = Complex64::new(0.0, 0.0);
    let coeffs = f
        .coeffs
        .iter()
        .zip(&mask)
        .map(|(&c, &keep)| if keep { c } else { zero })
        .collect();
    SpectralField {
        grid: f.grid,
        coeffs,
    }
}

/// Resolution indicator: relative size of the highest-index coefficients.
/// Non-finite fields report `f64::INFINITY`.
pub fn fourier_tail(f: &Field) -> f64 {
    match forward_transform(f) {
        Ok(s) => s.tail_ratio(),
        Err(_) => f64::INFINITY,
    }
}
