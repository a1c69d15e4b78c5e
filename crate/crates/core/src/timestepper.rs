//! Cox–Matthews ETDRK4 for `u_t = -∂_xΔu - ∂_x(u^p)` on the torus.
//!
//! The stiff linear part is integrated exactly in spectral space; the
//! φ-function combinations are obtained by averaging over a small circle in
//! the complex plane around each `L(k)·dt`, which stays accurate both for
//! tiny and for huge arguments.

use log::{debug, info};
use num_complex::Complex64;

use crate::diagnostics::{self, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::initial_data::{check_power, powi};
use crate::spectral::{dealias_mask, derivative_multiplier, SpectralField, SpectralPlan};

pub const DEFAULT_MASS_STOP_TOL: f64 = 1e-3;
pub const CONTOUR_POINTS: usize = 32;
pub const CONTOUR_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p: u32,
    pub grid: Grid,
    pub t_end: f64,
    pub nt: usize,
    pub output_every: usize,
    pub snapshot_times: Vec<f64>,
    pub mass_stop_tol: f64,
    pub dealias: bool,
    /// Drops the nonlinear term. Used for checking the linear flow.
    pub linear_only: bool,
}

impl SolverConfig {
    pub fn new(p: u32, grid: Grid, t_end: f64, nt: usize) -> Result<Self> {
        let cfg = Self {
            p,
            grid,
            t_end,
            nt,
            output_every: Self::default_output_every(nt),
            snapshot_times: Vec::new(),
            mass_stop_tol: DEFAULT_MASS_STOP_TOL,
            dealias: false,
            linear_only: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_output_every(nt: usize) -> usize {
        (nt / 2000).max(1)
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.nt as f64
    }

    pub fn validate(&self) -> Result<()> {
        check_power(self.p)?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.nt == 0 {
            return Err(Error::InvalidParameter("Nt must be positive".into()));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidParameter("output_every must be positive".into()));
        }
        if !(self.mass_stop_tol.is_finite() && self.mass_stop_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass_stop_tol must be positive, got {}",
                self.mass_stop_tol
            )));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(t.is_finite() && (0.0..=self.t_end).contains(&t)))
        {
            return Err(Error::InvalidParameter(format!(
                "snapshot time {t} outside [0, {}]",
                self.t_end
            )));
        }
        Ok(())
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        let dt = self.dt();
        let mut steps: Vec<usize> = self
            .snapshot_times
            .iter()
            .map(|t| ((t / dt).round() as usize).min(self.nt))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    MassDrift,
    NonFinite,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::MassDrift => "mass_drift",
            StopReason::NonFinite => "non_finite",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Last finite state reached.
    pub final_field: Field,
    pub final_time: f64,
    pub steps: usize,
    pub series: DiagnosticsSeries,
    pub snapshots: Vec<(f64, Field)>,
    pub stop_reason: StopReason,
}

/// `L(k) = i k_x (k_x² + k_y²)`, so that `û_t = L û - i k_x (u^p)^`.
pub fn linear_symbol(grid: &Grid) -> SpectralField {
    let d30 = derivative_multiplier(grid, 3, 0);
    let d12 = derivative_multiplier(grid, 1, 2);
    let coeffs = d30.iter().zip(&d12).map(|(a, b)| -(a + b)).collect();
    SpectralField::from_coeffs(*grid, coeffs).expect("symbol has the half-spectrum length")
}

/// `-∂_x(u^p)`, the power taken pointwise and the derivative spectrally; the
/// 2/3 rule is applied to `(u^p)^` when `dealias` is set.
pub fn nonlinear_term(u: &Field, p: u32, dealias: bool) -> Result<Field> {
    check_power(p)?;
    u.ensure_finite()?;
    let grid = *u.grid();
    let mut plan = SpectralPlan::new(grid);
    let mult = nonlinear_multiplier(&grid, dealias);
    let pow: Vec<f64> = u.values().iter().map(|&v| powi(v, p)).collect();
    let mut hat = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    plan.forward_into(&pow, &mut hat);
    for (h, m) in hat.iter_mut().zip(&mult) {
        *h *= m;
    }
    let mut out = vec![0.0; grid.len()];
    plan.inverse_into(&hat, &mut out);
    let f = Field::from_values(grid, out)?;
    f.ensure_finite()?;
    Ok(f)
}

fn nonlinear_multiplier(grid: &Grid, dealias: bool) -> Vec<Complex64> {
    let mut m: Vec<Complex64> = derivative_multiplier(grid, 1, 0).iter().map(|d| -d).collect();
    if dealias {
        for (v, keep) in m.iter_mut().zip(dealias_mask(grid)) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
    m
}

/// Per-mode ETDRK4 coefficient tables for one step size.
#[derive(Debug, Clone)]
pub struct PhiWeights {
    pub e: Vec<Complex64>,
    pub e2: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub f3: Vec<Complex64>,
}

/// Contour means for one `z = L·dt`, returned unscaled by `dt`:
/// `(Q, f1, f2, f3)`.
pub fn phi_combinations(z: Complex64, points: usize, radius: f64) -> [Complex64; 4] {
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for m in 0..points {
        let theta = std::f64::consts::PI * (2.0 * m as f64 + 1.0) / points as f64;
        let w = z + Complex64::from_polar(radius, theta);
        let ew = w.exp();
        let ew2 = (w / 2.0).exp();
        let w2 = w * w;
        let w3 = w2 * w;
        acc[0] += (ew2 - 1.0) / w;
        acc[1] += (-4.0 - w + ew * (4.0 - 3.0 * w + w2)) / w3;
        acc[2] += (2.0 + w + ew * (w - 2.0)) / w3;
        acc[3] += (-4.0 - 3.0 * w - w2 + ew * (4.0 - w)) / w3;
    }
    let n = points as f64;
    acc.map(|a| a / n)
}

impl PhiWeights {
    pub fn new(symbol: &SpectralField, dt: f64) -> Self {
        Self::with_contour(symbol, dt, CONTOUR_POINTS, CONTOUR_RADIUS)
    }

    pub fn with_contour(symbol: &SpectralField, dt: f64, points: usize, radius: f64) -> Self {
        let n = symbol.coeffs().len();
        let mut w = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in symbol.coeffs() {
            let z = l * dt;
            let [q, f1, f2, f3] = phi_combinations(z, points, radius);
            w.e.push(z.exp());
            w.e2.push((z / 2.0).exp());
            w.q.push(q * dt);
            w.f1.push(f1 * dt);
            w.f2.push(f2 * dt);
            w.f3.push(f3 * dt);
        }
        w
    }
}

pub fn phi_weights(symbol: &SpectralField, dt: f64) -> PhiWeights {
    PhiWeights::new(symbol, dt)
}

/// Fixed-step ETDRK4 integrator with preallocated work space. `dt` may be
/// negative, which runs the scheme backward in time.
pub struct Etdrk4 {
    grid: Grid,
    p: u32,
    dt: f64,
    linear_only: bool,
    plan: SpectralPlan,
    weights: PhiWeights,
    nmult: Vec<Complex64>,
    phys: Vec<f64>,
    pow: Vec<f64>,
    nv: Vec<Complex64>,
    a: Vec<Complex64>,
    na: Vec<Complex64>,
    b: Vec<Complex64>,
    nb: Vec<Complex64>,
}

impl Etdrk4 {
    pub fn new(grid: Grid, p: u32, dt: f64, dealias: bool, linear_only: bool) -> Result<Self> {
        check_power(p)?;
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be finite and non-zero, got {dt}")));
        }
        let weights = PhiWeights::new(&linear_symbol(&grid), dt);
        let n = grid.spectral_len();
        let zero = Complex64::new(0.0, 0.0);
        Ok(Self {
            grid,
            p,
            dt,
            linear_only,
            plan: SpectralPlan::new(grid),
            weights,
            nmult: nonlinear_multiplier(&grid, dealias),
            phys: vec![0.0; grid.len()],
            pow: vec![0.0; grid.len()],
            nv: vec![zero; n],
            a: vec![zero; n],
            na: vec![zero; n],
            b: vec![zero; n],
            nb: vec![zero; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Physical samples of the state last passed to [`Etdrk4::load`].
    pub fn physical(&self) -> &[f64] {
        &self.phys
    }

    /// Transforms `v` to physical space into the internal buffer.
    pub fn load(&mut self, v: &[Complex64]) {
        self.plan.inverse_into(v, &mut self.phys);
    }

    fn nonlinear(&mut self, which: Stage) {
        let out = match which {
            Stage::V => &mut self.nv,
            Stage::A => &mut self.na,
            Stage::B => &mut self.nb,
        };
        if self.linear_only {
            out.fill(Complex64::new(0.0, 0.0));
            return;
        }
        let p = self.p;
        for (d, &s) in self.pow.iter_mut().zip(&self.phys) {
            *d = powi(s, p);
        }
        self.plan.forward_into(&self.pow, out);
        for (o, m) in out.iter_mut().zip(&self.nmult) {
            *o *= m;
        }
    }

    /// Advances `v` by one step. The physical buffer must hold the inverse
    /// transform of `v` (see [`Etdrk4::load`]); it is clobbered.
    #[allow(clippy::needless_range_loop)]
    pub fn step_loaded(&mut self, v: &mut [Complex64]) {
        self.nonlinear(Stage::V);
        let w = &self.weights;
        for k in 0..v.len() {
            self.a[k] = w.e2[k] * v[k] + w.q[k] * self.nv[k];
        }
        self.plan.inverse_into(&self.a, &mut self.phys);
        self.nonlinear(Stage::A);
        let w = &self.weights;
        for k in 0..v.len() {
            self.b[k] = w.e2[k] * v[k] + w.q[k] * self.na[k];
        }
        self.plan.inverse_into(&self.b, &mut self.phys);
        self.nonlinear(Stage::B);
        let w = &self.weights;
        for k in 0..v.len() {
            // c overwrites a; the update without the last stage goes to v
            self.a[k] = w.e2[k] * self.a[k] + w.q[k] * (2.0 * self.nb[k] - self.nv[k]);
            v[k] = w.e[k] * v[k] + w.f1[k] * self.nv[k] + 2.0 * w.f2[k] * (self.na[k] + self.nb[k]);
        }
        self.plan.inverse_into(&self.a, &mut self.phys);
        // Nc goes to the `na` buffer
        self.nonlinear(Stage::A);
        let w = &self.weights;
        for k in 0..v.len() {
            v[k] += w.f3[k] * self.na[k];
        }
    }

    pub fn step(&mut self, v: &mut [Complex64]) {
        self.load(v);
        self.step_loaded(v);
    }

    /// Advances a physical field by `steps` steps.
    pub fn advance(&mut self, u: &Field, steps: usize) -> Result<Field> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut v = self.plan.forward(u)?.coeffs().to_vec();
        for _ in 0..steps {
            self.step(&mut v);
        }
        self.load(&v);
        Field::from_values(self.grid, self.phys.clone())
    }
}

#[derive(Clone, Copy)]
enum Stage {
    V,
    A,
    B,
}

fn squares_sum(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Evolves `u0` under `cfg`. Diagnostics are sampled at step multiples of
/// `output_every` and at the last step; the run stops early when the
/// relative drift of `∫u²` exceeds `mass_stop_tol` or a sample turns
/// non-finite.
pub fn etdrk4_run(u0: &Field, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    if u0.grid() != &cfg.grid {
        return Err(Error::GridMismatch);
    }
    u0.ensure_finite()?;
    let grid = cfg.grid;
    let dt = cfg.dt();
    let mut stepper = Etdrk4::new(grid, cfg.p, dt, cfg.dealias, cfg.linear_only)?;
    let mut plan = SpectralPlan::new(grid);
    let mut v = plan.forward(u0)?.coeffs().to_vec();
    let snap_steps = cfg.snapshot_steps();
    let mut next_snap = 0;

    let mass0 = diagnostics::mass(u0);
    let rel_err = |m: f64| {
        if mass0 == 0.0 {
            if m == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (1.0 - m / mass0).abs()
        }
    };

    let mut series = DiagnosticsSeries::new();
    let mut snapshots = Vec::new();
    let mut prev = v.clone();
    let mut stop_reason = StopReason::Completed;
    let mut n = 0;
    info!(
        "ETDRK4 run: p = {}, {}x{} grid, dt = {dt:.3e}, {} steps",
        cfg.p,
        grid.nx(),
        grid.ny(),
        cfg.nt
    );

    loop {
        stepper.load(&v);
        let t = n as f64 * dt;
        let phys = stepper.physical();
        if phys.iter().any(|x| !x.is_finite()) {
            stop_reason = StopReason::NonFinite;
            info!("non-finite state at step {n} (t = {t}); stopping");
            n -= 1;
            v = prev;
            stepper.load(&v);
            break;
        }
        let drift = rel_err(squares_sum(phys) * grid.cell_area());
        let stop = drift > cfg.mass_stop_tol;
        let sample = n % cfg.output_every == 0 || n == cfg.nt || stop;
        let snap = next_snap < snap_steps.len() && snap_steps[next_snap] == n;
        if sample || snap {
            let u = Field::from_values(grid, phys.to_vec())?;
            if sample {
                let spec = SpectralField::from_coeffs(grid, v.clone())?;
                series.push(diagnostics::measure(t, &u, &spec, cfg.p, Some(mass0)))?;
            }
            if snap {
                snapshots.push((t, u));
                next_snap += 1;
            }
        }
        if stop {
            stop_reason = StopReason::MassDrift;
            info!("relative mass drift {drift:.3e} at step {n} (t = {t}); stopping");
            break;
        }
        if n == cfg.nt {
            break;
        }
        if n % 10000 == 0 && n > 0 {
            debug!("step {n}/{}, mass drift {drift:.3e}", cfg.nt);
        }
        prev.copy_from_slice(&v);
        stepper.step_loaded(&mut v);
        n += 1;
    }

    let final_field = Field::from_values(grid, stepper.physical().to_vec())?;
    if stop_reason == StopReason::NonFinite && series.last().is_none_or(|s| s.t < n as f64 * dt) {
        // the last finite state closes the series
        let spec = SpectralField::from_coeffs(grid, v.clone())?;
        series.push(diagnostics::measure(n as f64 * dt, &final_field, &spec, cfg.p, Some(mass0)))?;
    }
    Ok(RunResult {
        final_time: n as f64 * dt,
        steps: n,
        final_field,
        series,
        snapshots,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{line_soliton, SolitonParams};
    use crate::spectral::spectral_derivative;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `φ_k(z) = Σ zⁿ/(n+k)!`
    fn phi_series(z: Complex64, k: u32) -> Complex64 {
        let mut fact = (1..=k).map(|v| v as f64).product::<f64>();
        let mut term = c(1.0 / fact, 0.0);
        let mut sum = term;
        for n in 1..80 {
            fact = (n + k) as f64;
            term = term * z / fact;
            sum += term;
        }
        sum
    }

    #[test]
    fn symbol_values() {
        let g = Grid::new(1.0, 2.0, 16, 8).unwrap();
        let l = linear_symbol(&g);
        for j in 0..g.ny_half() {
            assert_eq!(l.get(0, j), c(0.0, 0.0));
        }
        assert_eq!(l.get(1, 0), c(0.0, 1.0));
        // k_x = 2, k_y = 1.5: 2·(4 + 2.25)
        assert!((l.get(2, 3) - c(0.0, 12.5)).norm() < 1e-13);
        for i in 1..16 {
            for j in 0..g.ny_half() {
                let v = l.get(i, j);
                assert_eq!(v.re, 0.0);
                assert_eq!(l.get(16 - i, j), -v, "odd symbol at ({i},{j})");
            }
        }
    }

    #[test]
    fn phi_weights_at_zero() {
        let dt = 0.01;
        let [q, f1, f2, f3] = phi_combinations(c(0.0, 0.0), CONTOUR_POINTS, CONTOUR_RADIUS);
        assert!((q - c(0.5, 0.0)).norm() < 1e-14);
        for f in [f1, f2, f3] {
            assert!((f - c(1.0 / 6.0, 0.0)).norm() < 1e-14);
        }
        assert!(((f1 + 4.0 * f2 + f3) * dt - c(dt, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phi_weights_match_series() {
        for z in [c(1e-8, 0.0), c(0.0, 1e-5), c(0.0, 0.3), c(-0.7, 1.1), c(0.0, -2.5), c(1.5, 0.0)] {
            let [q, f1, f2, f3] = phi_combinations(z, CONTOUR_POINTS, CONTOUR_RADIUS);
            let (p1, p2, p3) = (phi_series(z, 1), phi_series(z, 2), phi_series(z, 3));
            let p1h = phi_series(z / 2.0, 1) / 2.0;
            assert!((q - p1h).norm() < 1e-12, "Q at {z}");
            assert!((f1 - (p1 - 3.0 * p2 + 4.0 * p3)).norm() < 1e-12, "f1 at {z}");
            assert!((f2 - (p2 - 2.0 * p3)).norm() < 1e-12, "f2 at {z}");
            assert!((f3 - (-p2 + 4.0 * p3)).norm() < 1e-12, "f3 at {z}");
        }
    }

    #[test]
    fn phi_weights_match_direct_formula_far_from_zero() {
        for z in [c(0.0, 10.0), c(0.0, -37.0), c(0.0, 400.0)] {
            let [_, f1, f2, f3] = phi_combinations(z, CONTOUR_POINTS, CONTOUR_RADIUS);
            let (ez, z3) = (z.exp(), z * z * z);
            let d1 = (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
            let d2 = (2.0 + z + ez * (z - 2.0)) / z3;
            let d3 = (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            for (a, b) in [(f1, d1), (f2, d2), (f3, d3)] {
                assert!((a - b).norm() < 1e-12 * b.norm().max(1e-3), "{z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn weight_tables_unitary_and_conjugate() {
        let g = Grid::new(1.0, 1.0, 32, 16).unwrap();
        let l = linear_symbol(&g);
        let w = PhiWeights::new(&l, 0.05);
        for v in &w.e {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let z = c(0.0, 10.0);
        assert!((z.exp().norm() - 1.0).abs() < 1e-12);
        let a = phi_combinations(z, CONTOUR_POINTS, CONTOUR_RADIUS);
        let b = phi_combinations(z.conj(), CONTOUR_POINTS, CONTOUR_RADIUS);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() - y).norm() < 1e-15);
        }
    }

    #[test]
    fn nonlinear_term_of_constant_vanishes() {
        let g = Grid::new(1.0, 1.0, 16, 16).unwrap();
        let u = Field::from_fn(g, |_, _| 0.8);
        for p in 2..=4 {
            assert!(nonlinear_term(&u, p, false).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_term_traveling_wave_identity() {
        // Q''' + (Q²)' = cQ' for the line soliton
        let g = Grid::new(20.0, 1.0, 1024, 4).unwrap();
        let cs = 1.0;
        let u = line_soliton(&SolitonParams::new(2, cs, 0.0).unwrap(), &g).unwrap();
        let n = nonlinear_term(&u, 2, false).unwrap();
        let mut plan = SpectralPlan::new(g);
        let hat = plan.forward(&u).unwrap();
        let uxxx = plan.inverse(&spectral_derivative(&hat, 3, 0).unwrap()).unwrap();
        let ux = plan.inverse(&spectral_derivative(&hat, 1, 0).unwrap()).unwrap();
        let worst = (0..g.len())
            .map(|k| (n.values()[k] - uxxx.values()[k] + cs * ux.values()[k]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "defect {worst}");
    }

    #[test]
    fn nonlinear_term_parity() {
        // u odd in x: u^p has the parity of p, its x-derivative the opposite one
        let g = Grid::new(1.0, 1.0, 32, 8).unwrap();
        let u = Field::from_fn(g, |x, y| x.sin() * (1.0 + 0.2 * y.cos()) + 0.3 * (2.0 * x).sin());
        for p in 2..=4 {
            let n = nonlinear_term(&u, p, false).unwrap();
            let sign = if p % 2 == 0 { -1.0 } else { 1.0 };
            for i in 1..32 {
                for j in 0..8 {
                    assert!((n.at(i, j) - sign * n.at(32 - i, j)).abs() < 1e-13, "p={p}");
                }
            }
        }
    }

    fn harmonic_config(g: Grid, nt: usize, t_end: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(2, g, t_end, nt).unwrap();
        cfg.linear_only = true;
        cfg
    }

    #[test]
    fn linear_flow_of_harmonic_is_exact() {
        let g = Grid::new(1.0, 1.0, 64, 64).unwrap();
        let (kx, ky) = (3.0, -2.0);
        let u0 = Field::from_fn(g, |x, y| (kx * x + ky * y).cos());
        let cfg = harmonic_config(g, 100, 0.37);
        let run = etdrk4_run(&u0, &cfg).unwrap();
        let t = 0.37;
        let w = kx * (kx * kx + ky * ky);
        let exact = Field::from_fn(g, |x, y| (kx * x + ky * y + w * t).cos());
        assert_eq!(run.stop_reason, StopReason::Completed);
        assert!(run.final_field.max_abs_diff(&exact) < 1e-10);
    }

    #[test]
    fn linear_flow_is_reversible() {
        let g = Grid::new(1.0, 1.5, 32, 32).unwrap();
        let u0 = Field::from_fn(g, |x, y| (-(x * x + y * y)).exp() + 0.1 * (2.0 * x - y).sin());
        let mut fwd = Etdrk4::new(g, 2, 0.01, false, true).unwrap();
        let mut bwd = Etdrk4::new(g, 2, -0.01, false, true).unwrap();
        let back = bwd.advance(&fwd.advance(&u0, 50).unwrap(), 50).unwrap();
        assert!(back.max_abs_diff(&u0) < 1e-12);
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = Grid::new(2.0, 1.0, 32, 16).unwrap();
        let cfg = SolverConfig::new(3, g, 1.0, 20).unwrap();
        let run = etdrk4_run(&Field::zeros(g), &cfg).unwrap();
        assert_eq!(run.stop_reason, StopReason::Completed);
        assert_eq!(run.final_field.max_abs(), 0.0);
        assert_eq!(run.series.len(), 21);
        for s in run.series.samples() {
            assert_eq!(s.sup_norm, 0.0);
            assert_eq!(s.mass, 0.0);
            assert_eq!(s.mass_rel_err, 0.0);
        }
    }

    #[test]
    fn soliton_translates_at_its_speed() {
        let g = Grid::new(16.0, 1.0, 512, 4).unwrap();
        let params = SolitonParams::new(2, 1.0, -10.0).unwrap();
        let u0 = line_soliton(&params, &g).unwrap();
        let cfg = SolverConfig::new(2, g, 1.0, 400).unwrap();
        let run = etdrk4_run(&u0, &cfg).unwrap();
        let exact = line_soliton(&SolitonParams::new(2, 1.0, -9.0).unwrap(), &g).unwrap();
        let err = run.final_field.max_abs_diff(&exact);
        assert!(err < 1e-6, "error {err}");
        let first = run.series.samples()[0];
        let last = run.series.last().unwrap();
        assert!(last.mass_rel_err < 1e-10);
        assert!(((last.energy - first.energy) / first.energy).abs() < 1e-9);
    }

    #[test]
    fn mean_mode_is_conserved() {
        let g = Grid::new(2.0, 2.0, 64, 64).unwrap();
        let u0 = Field::from_fn(g, |x, y| 0.5 * (-(x * x + 2.0 * y * y)).exp() + 0.2);
        let cfg = SolverConfig::new(2, g, 0.2, 50).unwrap();
        let run = etdrk4_run(&u0, &cfg).unwrap();
        let m0 = run.series.samples()[0].mean_integral;
        let m1 = run.series.last().unwrap().mean_integral;
        assert!(((m1 - m0) / m0).abs() < 1e-12);
    }

    #[test]
    fn series_cadence_and_snapshots() {
        let g = Grid::new(2.0, 2.0, 16, 16).unwrap();
        let u0 = Field::from_fn(g, |x, _| 0.1 * x.cos());
        let mut cfg = SolverConfig::new(2, g, 1.0, 10).unwrap();
        cfg.output_every = 4;
        cfg.snapshot_times = vec![0.5, 0.0];
        let run = etdrk4_run(&u0, &cfg).unwrap();
        let ts: Vec<f64> = run.series.times();
        assert_eq!(ts.len(), 4);
        assert!((ts[1] - 0.4).abs() < 1e-15 && (ts[2] - 0.8).abs() < 1e-15 && (ts[3] - 1.0).abs() < 1e-15);
        assert_eq!(run.snapshots.len(), 2);
        assert_eq!(run.snapshots[0].0, 0.0);
        assert!((run.snapshots[1].0 - 0.5).abs() < 1e-15);
        assert!(run.snapshots[0].1.max_abs_diff(&u0) < 1e-16);
    }

    #[test]
    fn mass_drift_stops_run() {
        // a steep bump on a coarse grid loses accuracy at once
        let g = Grid::new(1.0, 1.0, 16, 16).unwrap();
        let u0 = Field::from_fn(g, |x, y| 3.0 * (-4.0 * (x * x + y * y)).exp());
        let mut cfg = SolverConfig::new(2, g, 1.0, 10).unwrap();
        cfg.mass_stop_tol = 1e-14;
        let run = etdrk4_run(&u0, &cfg).unwrap();
        assert_eq!(run.stop_reason, StopReason::MassDrift);
        assert!(run.steps < 10);
        assert!(run.series.last().unwrap().mass_rel_err > 1e-14);
    }

    #[test]
    fn blow_up_to_overflow_reports_non_finite() {
        let g = Grid::new(1.0, 1.0, 16, 16).unwrap();
        let u0 = Field::from_fn(g, |x, y| 40.0 * (-(x * x + y * y)).exp());
        let mut cfg = SolverConfig::new(4, g, 10.0, 20).unwrap();
        cfg.mass_stop_tol = f64::MAX;
        let run = etdrk4_run(&u0, &cfg).unwrap();
        assert_eq!(run.stop_reason, StopReason::NonFinite);
        run.final_field.ensure_finite().unwrap();
        assert!((run.series.last().unwrap().t - run.final_time).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let g = Grid::new(1.0, 1.0, 8, 8).unwrap();
        assert!(SolverConfig::new(5, g, 1.0, 10).is_err());
        assert!(SolverConfig::new(2, g, 0.0, 10).is_err());
        assert!(SolverConfig::new(2, g, 1.0, 0).is_err());
        let mut cfg = SolverConfig::new(2, g, 1.0, 10).unwrap();
        cfg.snapshot_times = vec![1.5];
        assert!(cfg.validate().is_err());
        assert_eq!(SolverConfig::default_output_every(2000), 1);
        assert_eq!(SolverConfig::default_output_every(100_000), 50);
    }
}
