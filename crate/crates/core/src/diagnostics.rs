//! Invariants, amplitude tracking and resolution indicators.
//!
//! `mass` is the L² quantity `∫u²`; `mean_integral` is `∫u`. The energy is
//! `½∫|∇u|² − ∫u^{p+1}/(p+1)`. Gradient terms are evaluated by Parseval on
//! the spectral coefficients, with the Nyquist wavenumber dropped for odd
//! derivatives as everywhere else.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::spectral::{SpectralField, SpectralPlan};

/// Column order of the time-series file.
pub const COLUMNS: [&str; 10] = [
    "t",
    "sup_norm",
    "mass",
    "mean_integral",
    "energy",
    "ux_l2",
    "peak_x",
    "peak_y",
    "fourier_tail",
    "mass_rel_err",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub sup_norm: f64,
    pub mass: f64,
    pub mean_integral: f64,
    pub energy: f64,
    pub ux_l2: f64,
    pub peak_x: f64,
    pub peak_y: f64,
    pub fourier_tail: f64,
    pub mass_rel_err: f64,
}

impl DiagnosticsSample {
    pub fn to_row(&self) -> [f64; 10] {
        [
            self.t,
            self.sup_norm,
            self.mass,
            self.mean_integral,
            self.energy,
            self.ux_l2,
            self.peak_x,
            self.peak_y,
            self.fourier_tail,
            self.mass_rel_err,
        ]
    }

    pub fn from_row(r: [f64; 10]) -> Self {
        Self {
            t: r[0],
            sup_norm: r[1],
            mass: r[2],
            mean_integral: r[3],
            energy: r[4],
            ux_l2: r[5],
            peak_x: r[6],
            peak_y: r[7],
            fourier_tail: r[8],
            mass_rel_err: r[9],
        }
    }
}

/// Samples with strictly increasing time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsSeries {
    samples: Vec<DiagnosticsSample>,
}

impl DiagnosticsSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<DiagnosticsSample>) -> Result<Self> {
        let mut s = Self::new();
        for x in samples {
            s.push(x)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, sample: DiagnosticsSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(sample.t > last.t) {
                return Err(Error::InvalidParameter(format!(
                    "series time must increase strictly ({} after {})",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[DiagnosticsSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&DiagnosticsSample> {
        self.samples.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.sup_norm).collect()
    }
}

pub fn mass(u: &Field) -> f64 {
    u.values().iter().map(|v| v * v).sum::<f64>() * u.grid().cell_area()
}

pub fn mean_integral(u: &Field) -> f64 {
    u.sum() * u.grid().cell_area()
}

pub fn energy(u: &Field, p: u32) -> Result<f64> {
    let spec = SpectralPlan::new(*u.grid()).forward(u)?;
    Ok(energy_from_parts(u.values(), &spec, p))
}

fn energy_from_parts(u: &[f64], spec: &SpectralField, p: u32) -> f64 {
    let g = spec.grid();
    let grad = gradient_square_mean(g, spec.coeffs()) * g.area();
    let potential: f64 = u.iter().map(|&v| v.powi(p as i32 + 1)).sum::<f64>() * g.cell_area();
    0.5 * grad - potential / (p as f64 + 1.0)
}

/// Mean of `|∇u|²` from coefficients.
fn gradient_square_mean(g: &Grid, coeffs: &[Complex64]) -> f64 {
    let nx = g.nx();
    let nyq_x = nx / 2;
    let nyq_y = g.ny() / 2;
    let mut acc = 0.0;
    for j in 0..g.ny_half() {
        let w = if j == 0 || j == nyq_y { 1.0 } else { 2.0 };
        let ky = if j == nyq_y { 0.0 } else { g.ky(j) };
        let mut row = 0.0;
        for i in 0..nx {
            let kx = if i == nyq_x { 0.0 } else { g.kx(i) };
            row += (kx * kx + ky * ky) * coeffs[j * nx + i].norm_sqr();
        }
        acc += w * row;
    }
    acc
}

fn ux_square_mean(g: &Grid, coeffs: &[Complex64]) -> f64 {
    let nx = g.nx();
    let kx2: Vec<f64> = (0..nx)
        .map(|i| if i == nx / 2 { 0.0 } else { g.kx(i).powi(2) })
        .collect();
    let mut acc = 0.0;
    for j in 0..g.ny_half() {
        let w = if j == 0 || j == g.ny() / 2 { 1.0 } else { 2.0 };
        let row: f64 = coeffs[j * nx..(j + 1) * nx]
            .iter()
            .zip(&kx2)
            .map(|(c, k)| k * c.norm_sqr())
            .sum();
        acc += w * row;
    }
    acc
}

pub fn ux_l2(u: &Field) -> Result<f64> {
    let spec = SpectralPlan::new(*u.grid()).forward(u)?;
    Ok((ux_square_mean(u.grid(), spec.coeffs()) * u.grid().area()).sqrt())
}

/// 1D quadratic Lagrange basis on nodes `-1, 0, 1` and its derivatives.
fn lagrange(t: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    (
        [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)],
        [t - 0.5, -2.0 * t, t + 0.5],
        [1.0, -2.0, 1.0],
    )
}

/// Maximum of the tensor-product quadratic interpolant of a 3×3 stencil
/// on `[-1, 1]²`. Returns `(value, ξ, η)`; never below the centre value.
fn biquadratic_max(f: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let eval = |xi: f64, eta: f64| {
        let (lx, dlx, ddlx) = lagrange(xi);
        let (ly, dly, ddly) = lagrange(eta);
        let mut out = [0.0; 6];
        for m in 0..3 {
            for n in 0..3 {
                let v = f[m][n];
                out[0] += v * lx[m] * ly[n];
                out[1] += v * dlx[m] * ly[n];
                out[2] += v * lx[m] * dly[n];
                out[3] += v * ddlx[m] * ly[n];
                out[4] += v * dlx[m] * dly[n];
                out[5] += v * lx[m] * ddly[n];
            }
        }
        out
    };
    let centre = f[1][1];
    let (mut xi, mut eta) = (0.0_f64, 0.0_f64);
    for _ in 0..30 {
        let [_, gx, gy, hxx, hxy, hyy] = eval(xi, eta);
        let det = hxx * hyy - hxy * hxy;
        if !(hxx < 0.0 && det > 0.0) {
            break;
        }
        let sx = -(hyy * gx - hxy * gy) / det;
        let sy = -(hxx * gy - hxy * gx) / det;
        let nxi = (xi + sx).clamp(-1.0, 1.0);
        let neta = (eta + sy).clamp(-1.0, 1.0);
        let moved = (nxi - xi).abs().max((neta - eta).abs());
        xi = nxi;
        eta = neta;
        if moved < 1e-15 {
            break;
        }
    }
    let v = eval(xi, eta)[0];
    if v >= centre {
        (v, xi, eta)
    } else {
        (centre, 0.0, 0.0)
    }
}

/// Refined maximum of `s·u` around grid point `(i, j)`, `s = ±1`.
pub(crate) fn refine_at(u: &Field, i: usize, j: usize, sign: f64) -> (f64, f64, f64) {
    let g = u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut stencil = [[0.0; 3]; 3];
    for (m, row) in stencil.iter_mut().enumerate() {
        let ii = (i + nx + m - 1) % nx;
        for (n, v) in row.iter_mut().enumerate() {
            let jj = (j + ny + n - 1) % ny;
            *v = sign * u.at(ii, jj);
        }
    }
    let (v, xi, eta) = biquadratic_max(&stencil);
    (
        sign * v,
        g.wrap_x(g.x(i) + xi * g.dx()),
        g.wrap_y(g.y(j) + eta * g.dy()),
    )
}

/// Sup-norm with the argmax refined by a biquadratic fit on the 3×3
/// stencil around the discrete maximum of `|u|`. Ties go to the first grid
/// point in storage order. Returns `(value, peak_x, peak_y)`.
pub fn sup_norm_refined(u: &Field) -> (f64, f64, f64) {
    let (idx, _) = u
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (k, v)| {
            if v.abs() > bv {
                (k, v.abs())
            } else {
                (bi, bv)
            }
        });
    let ny = u.grid().ny();
    let (i, j) = (idx / ny, idx % ny);
    let sign = if u.values()[idx] < 0.0 { -1.0 } else { 1.0 };
    let (v, x, y) = refine_at(u, i, j, sign);
    (v.abs(), x, y)
}

/// State of one sample, given the physical samples and the coefficients of
/// the same field.
pub(crate) fn measure(t: f64, u: &Field, spec: &SpectralField, p: u32, mass0: Option<f64>) -> DiagnosticsSample {
    let g = *u.grid();
    let m = mass(u);
    let (sup, px, py) = sup_norm_refined(u);
    let mass_rel_err = match mass0 {
        None => 0.0,
        Some(0.0) => {
            if m == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        Some(m0) => (1.0 - m / m0).abs(),
    };
    DiagnosticsSample {
        t,
        sup_norm: sup,
        mass: m,
        mean_integral: mean_integral(u),
        energy: energy_from_parts(u.values(), spec, p),
        ux_l2: (ux_square_mean(&g, spec.coeffs()) * g.area()).sqrt(),
        peak_x: px,
        peak_y: py,
        fourier_tail: spec.tail_ratio(),
        mass_rel_err,
    }
}

/// Full diagnostics of a field; `mass0` is the reference for the relative
/// mass error (`None` means this field is the reference).
pub fn measure_field(t: f64, u: &Field, p: u32, mass0: Option<f64>) -> Result<DiagnosticsSample> {
    let spec = SpectralPlan::new(*u.grid()).forward(u)?;
    Ok(measure(t, u, &spec, p, mass0))
}

/// Length scale `L(t) = (|u|_∞(t) / |u|_∞(t_ref))^{-(p-1)/2}` implied by the
/// amplitude scaling `|u|_∞ ∝ L^{-2/(p-1)}`. The reference sample defaults
/// to the first one.
pub fn extract_l(series: &DiagnosticsSeries, p: u32, reference: Option<usize>) -> Result<Vec<f64>> {
    crate::initial_data::check_power(p)?;
    let sups = series.sup_norms();
    let r = reference.unwrap_or(0);
    let base = *sups
        .get(r)
        .ok_or_else(|| Error::InvalidParameter(format!("reference sample {r} out of range")))?;
    if let Some(k) = sups.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter(format!("sup norm of sample {k} is not positive")));
    }
    let exponent = -(p as f64 - 1.0) / 2.0;
    Ok(sups.iter().map(|s| (s / base).powf(exponent)).collect())
}
