//! Ground-state lumps: positive radial solutions of `-cQ + ΔQ + Q^p = 0`.
//!
//! The profile is computed by Petviashvili's stabilized fixed-point
//! iteration on a dedicated square grid and moved to other grids or speeds
//! through the trigonometric interpolant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::initial_data::{check_power, powi};
use crate::spectral::{laplacian_symbol, weighted_sum, SpectralInterpolant, SpectralPlan};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_LUMP_POINTS: usize = 512;
/// The `p = 4` profile has a closer complex singularity and needs finer sampling.
pub const DEFAULT_LUMP_POINTS_P4: usize = 1024;

/// Half-period scale of the default lump grid for speed `c`.
pub fn default_half_period(c: f64) -> f64 {
    10.0 / c.sqrt()
}

/// Square grid used for lump computations at speed `c`.
pub fn default_lump_grid(p: u32, c: f64) -> Result<Grid> {
    let l = default_half_period(c);
    let n = if p >= 4 { DEFAULT_LUMP_POINTS_P4 } else { DEFAULT_LUMP_POINTS };
    Grid::new(l, l, n, n)
}

#[derive(Debug, Clone)]
pub struct LumpProfile {
    pub values: Field,
    pub c: f64,
    pub p: u32,
    /// Sup-norm of the stationary-equation defect.
    pub residual: f64,
}

impl LumpProfile {
    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    /// Value at the grid origin, which is the profile maximum.
    pub fn peak(&self) -> f64 {
        let g = self.grid();
        self.values.at(g.nx() / 2, g.ny() / 2)
    }

    /// Samples `c_new^{1/(p-1)} Q(√c_new·(x - xc), √c_new·(y - yc))` on
    /// `target`, displacements taken as minimum periodic images. Points whose
    /// scaled displacement leaves this profile's grid are set to zero.
    ///
    /// Requires `self.c == 1`.
    pub fn place(&self, target: &Grid, c_new: f64, center: (f64, f64)) -> Result<Field> {
        self.require_unit_speed()?;
        if !(c_new.is_finite() && c_new > 0.0) {
            return Err(Error::InvalidParameter(format!("lump speed must be positive, got {c_new}")));
        }
        let base = *self.grid();
        let s = c_new.sqrt();
        let scale = c_new.powf(1.0 / (self.p as f64 - 1.0));
        let half_x = std::f64::consts::PI * base.lx();
        let half_y = std::f64::consts::PI * base.ly();

        let select = |n: usize, coord: &dyn Fn(usize) -> f64, half: f64| -> (Vec<usize>, Vec<f64>) {
            let mut idx = Vec::new();
            let mut pts = Vec::new();
            for k in 0..n {
                let v = s * coord(k);
                if v >= -half && v < half {
                    idx.push(k);
                    pts.push(v);
                }
            }
            (idx, pts)
        };
        let (ix, xs) = select(target.nx(), &|i| target.wrap_x(target.x(i) - center.0), half_x);
        let (jy, ys) = select(target.ny(), &|j| target.wrap_y(target.y(j) - center.1), half_y);

        let interp = SpectralInterpolant::from_field(&self.values)?;
        let vals = interp.eval_tensor(&xs, &ys);
        let mut out = Field::zeros(*target);
        let ny = target.ny();
        let out_vals = out.values_mut();
        for (a, &i) in ix.iter().enumerate() {
            for (b, &j) in jy.iter().enumerate() {
                out_vals[i * ny + j] = scale * vals[a * ys.len() + b];
            }
        }
        Ok(out)
    }

    fn require_unit_speed(&self) -> Result<()> {
        if (self.c - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "base lump must have c = 1, got {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Sup-norm of `-cQ + ΔQ + Q^p` with the Laplacian taken spectrally.
pub fn stationary_defect(q: &Field, p: u32, c: f64) -> Result<f64> {
    let grid = *q.grid();
    let mut plan = SpectralPlan::new(grid);
    let mut spec = plan.forward(q)?;
    let k2 = laplacian_symbol(&grid);
    for (v, k) in spec.coeffs_mut().iter_mut().zip(&k2) {
        *v *= -k;
    }
    let lap = plan.inverse(&spec)?;
    Ok(q
        .values()
        .iter()
        .zip(lap.values())
        .fold(0.0_f64, |m, (&u, &l)| m.max((-c * u + l + powi(u, p)).abs())))
}

fn inner(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    let nx = grid.nx();
    let nyh = grid.ny_half();
    let mut total = 0.0;
    for j in 0..nyh {
        let w = if j == 0 || j == nyh - 1 { 1.0 } else { 2.0 };
        let row: f64 = a[j * nx..(j + 1) * nx]
            .iter()
            .zip(&b[j * nx..(j + 1) * nx])
            .map(|(x, y)| (x * y.conj()).re)
            .sum();
        total += w * row;
    }
    total
}

/// Petviashvili iteration for the ground state at speed `c`, seeded with
/// `exp(-(x²+y²)/4)` centred at the grid origin.
pub fn petviashvili(p: u32, c: f64, grid: &Grid, tol: f64, max_iter: usize) -> Result<LumpProfile> {
    check_power(p)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!("lump speed must be positive, got {c}")));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter("tol and max_iter must be positive".into()));
    }
    let seed = Field::from_fn(*grid, |x, y| (-(x * x + y * y) / 4.0).exp());
    let edge = seed.at(0, grid.ny() / 2).max(seed.at(grid.nx() / 2, 0));
    if edge >= 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "lump grid too small: seed is {edge:.1e} of its peak at the boundary"
        )));
    }

    let gamma = p as f64 / (p as f64 - 1.0);
    let mut plan = SpectralPlan::new(*grid);
    let symbol: Vec<f64> = laplacian_symbol(grid).into_iter().map(|k2| c + k2).collect();
    let n_spec = grid.nx() * grid.ny_half();

    let mut q = seed;
    let mut q_hat = vec![Complex64::new(0.0, 0.0); n_spec];
    let mut n_hat = vec![Complex64::new(0.0, 0.0); n_spec];
    let mut lq_hat = vec![Complex64::new(0.0, 0.0); n_spec];
    let mut nonlin = vec![0.0; grid.len()];
    let mut lap = vec![0.0; grid.len()];
    plan.forward_into(q.values(), &mut q_hat);

    let mut residual = f64::INFINITY;
    for iteration in 0..max_iter {
        for (n, &u) in nonlin.iter_mut().zip(q.values()) {
            *n = powi(u, p);
        }
        // defect of the current iterate: -cQ + ΔQ + Q^p = -(c - Δ)Q + Q^p
        for ((l, &qh), &s) in lq_hat.iter_mut().zip(&q_hat).zip(&symbol) {
            *l = qh * s;
        }
        plan.inverse_into(&lq_hat, &mut lap);
        residual = nonlin
            .iter()
            .zip(&lap)
            .fold(0.0_f64, |m, (&n, &l)| m.max((n - l).abs()));
        if !residual.is_finite() {
            return Err(Error::Diverged {
                iteration,
                factor: f64::NAN,
            });
        }
        if residual < tol {
            return Ok(LumpProfile {
                values: q,
                c,
                p,
                residual,
            });
        }

        plan.forward_into(&nonlin, &mut n_hat);
        let factor = inner(grid, &lq_hat, &q_hat) / inner(grid, &n_hat, &q_hat);
        if !(factor > 0.1 && factor < 10.0) {
            return Err(Error::Diverged { iteration, factor });
        }
        let stab = factor.powf(gamma);
        for ((qh, &nh), &s) in q_hat.iter_mut().zip(&n_hat).zip(&symbol) {
            *qh = nh * (stab / s);
        }
        plan.inverse_into(&q_hat, q.values_mut());
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

/// `c_new^{1/(p-1)} Q(√c_new x, √c_new y)` resampled on the base grid.
pub fn rescale_lump(base: &LumpProfile, c_new: f64) -> Result<LumpProfile> {
    let values = base.place(base.grid(), c_new, (0.0, 0.0))?;
    let residual = stationary_defect(&values, base.p, c_new)?;
    Ok(LumpProfile {
        values,
        c: c_new,
        p: base.p,
        residual,
    })
}

/// `∫ Q² dx dy` of the profile on its torus.
pub fn lump_mass(profile: &LumpProfile) -> Result<f64> {
    let s = SpectralPlan::new(*profile.grid()).forward(&profile.values)?;
    Ok(weighted_sum(profile.grid(), s.coeffs(), |c| c.norm_sqr()) * profile.grid().area())
}
