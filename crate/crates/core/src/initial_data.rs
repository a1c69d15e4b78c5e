//! Line solitons and the two perturbation families used as initial data.

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Fails unless `p` is one of the supported nonlinearity powers.
pub fn check_power(p: u32) -> Result<()> {
    if matches!(p, 2..=4) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be one of 2,3,4, got {p}")))
    }
}

/// `v^p` for small integer powers.
#[inline]
pub(crate) fn powi(v: f64, p: u32) -> f64 {
    match p {
        2 => v * v,
        3 => v * v * v,
        4 => {
            let s = v * v;
            s * s
        }
        _ => v.powi(p as i32),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub p: u32,
    pub c: f64,
    pub x0: f64,
}

impl SolitonParams {
    pub fn new(p: u32, c: f64, x0: f64) -> Result<Self> {
        let params = Self { p, c, x0 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_power(self.p)?;
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("soliton speed c must be positive, got {}", self.c)));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        Ok(())
    }

    /// Peak height `((p+1)c/2)^{1/(p-1)}`, the value for which
    /// `Q_c(x - ct)` solves `u_t + (u_xx + u^p)_x = 0`.
    pub fn amplitude(&self) -> f64 {
        let p = self.p as f64;
        ((p + 1.0) * self.c / 2.0).powf(1.0 / (p - 1.0))
    }

    /// Inverse decay length `√c (p-1)/2` of the `sech²` argument.
    pub fn width_factor(&self) -> f64 {
        self.c.sqrt() * (self.p as f64 - 1.0) / 2.0
    }

    /// Profile value at `z = x - x0` (not wrapped).
    pub fn profile(&self, z: f64) -> f64 {
        let w = (self.width_factor() * z).abs();
        // sech w = 2e^{-w} / (1 + e^{-2w}), overflow free
        let e = (-w).exp();
        let sech = 2.0 * e / (1.0 + e * e);
        let exponent = 2.0 / (self.p as f64 - 1.0);
        self.amplitude() * sech.powf(exponent)
    }

    /// Soliton speed whose profile peaks at `amplitude`; inverse of
    /// [`SolitonParams::amplitude`].
    pub fn speed_for_amplitude(p: u32, amplitude: f64) -> f64 {
        2.0 * amplitude.powi(p as i32 - 1) / (p as f64 + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerturbationKind {
    #[default]
    None,
    /// `a·exp(-b²(x²+y²))`
    Gaussian,
    /// `a·cos²(y/b + δ)·exp(-x²)`
    CosineModulated,
}

impl PerturbationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PerturbationKind::None => "none",
            PerturbationKind::Gaussian => "gaussian",
            PerturbationKind::CosineModulated => "cosine_modulated",
        }
    }
}

impl std::str::FromStr for PerturbationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(PerturbationKind::None),
            "gaussian" => Ok(PerturbationKind::Gaussian),
            "cosine_modulated" => Ok(PerturbationKind::CosineModulated),
            other => Err(format!(
                "unknown perturbation `{other}` (expected none, gaussian or cosine_modulated)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::None,
            a: 0.0,
            b: 1.0,
            delta: 0.0,
        }
    }
}

impl PerturbationSpec {
    pub fn gaussian(a: f64, b: f64) -> Self {
        Self {
            kind: PerturbationKind::Gaussian,
            a,
            b,
            delta: 0.0,
        }
    }

    pub fn cosine_modulated(a: f64, b: f64, delta: f64) -> Self {
        Self {
            kind: PerturbationKind::CosineModulated,
            a,
            b,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == PerturbationKind::None {
            return Ok(());
        }
        if !(self.a.is_finite() && self.delta.is_finite()) {
            return Err(Error::InvalidParameter("perturbation a and delta must be finite".into()));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::InvalidParameter(format!("perturbation b must be positive, got {}", self.b)));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            PerturbationKind::None => 0.0,
            PerturbationKind::Gaussian => self.a * (-self.b * self.b * (x * x + y * y)).exp(),
            PerturbationKind::CosineModulated => {
                let c = (y / self.b + self.delta).cos();
                self.a * c * c * (-x * x).exp()
            }
        }
    }
}

/// Relative size of the soliton tail at the x-boundary of `grid`.
pub fn boundary_decay(params: &SolitonParams, grid: &Grid) -> f64 {
    params.profile(std::f64::consts::PI * grid.lx()) / params.amplitude()
}

/// The `y`-independent line soliton `Q_c(x - x0)`, `x - x0` taken as the
/// minimum periodic image.
pub fn line_soliton(params: &SolitonParams, grid: &Grid) -> Result<Field> {
    params.validate()?;
    let decay = boundary_decay(params, grid);
    if decay > 1e-15 {
        warn!(
            "line soliton decays only to {decay:.2e} of its peak at the x-boundary; enlarge Lx for machine-precision decay"
        );
    }
    let profile: Vec<f64> = (0..grid.nx())
        .map(|i| params.profile(grid.wrap_x(grid.x(i) - params.x0)))
        .collect();
    let ny = grid.ny();
    let mut values = Vec::with_capacity(grid.len());
    for v in profile {
        values.extend(std::iter::repeat_n(v, ny));
    }
    Field::from_values(*grid, values)
}

pub fn build_initial_data(params: &SolitonParams, pert: &PerturbationSpec, grid: &Grid) -> Result<Field> {
    pert.validate()?;
    let mut field = line_soliton(params, grid)?;
    if pert.kind != PerturbationKind::None {
        let xs = grid.xs();
        let ys = grid.ys();
        let ny = grid.ny();
        for (i, row) in field.values_mut().chunks_exact_mut(ny).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += pert.eval(xs[i], ys[j]);
            }
        }
    }
    Ok(field)
}

/// Transverse stability threshold `4/(5 Ly²)` of the `p = 2` line soliton.
pub fn critical_speed_p2(ly: f64) -> f64 {
    4.0 / (5.0 * ly * ly)
}
