//! Post-processing: soliton speed from a final state, lump decomposition and
//! blow-up rate fits.

use std::f64::consts::PI;

use log::{debug, warn};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::diagnostics::{refine_at, sup_norm_refined, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::initial_data::{check_power, SolitonParams};
use crate::lump::LumpProfile;
use crate::spectral::SpectralInterpolant;

pub const DEFAULT_THRESHOLD_FRAC: f64 = 0.3;
pub const DEFAULT_MIN_SEPARATION: f64 = 1.0;

/// Peak of a periodic 1D profile sampled at `x_i = -πL + i·2πL/N`, refined
/// by Newton's method on its trigonometric interpolant. Returns
/// `(value, x)`.
pub fn refine_max_1d(values: &[f64], l: f64) -> (f64, f64) {
    let n = values.len();
    let dx = 2.0 * PI * l / n as f64;
    let (i0, &v0) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if n < 4 {
        return (v0, -PI * l + i0 as f64 * dx);
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v / n as f64, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // f(s) = Σ_m F_m e^{i k_m s}, s = x + πL; the Nyquist term as a cosine
    let eval = |s: f64| {
        let mut d = [0.0; 3];
        for (m, c) in buf.iter().enumerate() {
            let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            let k = signed / l;
            if m == n / 2 {
                let (sin, cos) = (k * s).sin_cos();
                d[0] += c.re * cos;
                d[1] -= c.re * k * sin;
                d[2] -= c.re * k * k * cos;
            } else {
                let e = c * Complex64::cis(k * s);
                d[0] += e.re;
                d[1] -= k * e.im;
                d[2] -= k * k * e.re;
            }
        }
        d
    };
    let s0 = i0 as f64 * dx;
    let mut s = s0;
    for _ in 0..50 {
        let [_, d1, d2] = eval(s);
        if !(d2 < 0.0) {
            break;
        }
        let step = (-d1 / d2).clamp(-dx, dx);
        s += step;
        if step.abs() < 1e-14 * dx {
            break;
        }
    }
    let v = eval(s)[0];
    if v >= v0 && (s - s0).abs() <= 2.0 * dx {
        let x = s.rem_euclid(2.0 * PI * l) - PI * l;
        (v, x)
    } else {
        (v0, -PI * l + s0)
    }
}

/// Speed of the line soliton whose height matches the refined maximum of
/// the y-average of `final_state`.
pub fn fit_soliton_speed(final_state: &Field, p: u32) -> Result<f64> {
    check_power(p)?;
    final_state.ensure_finite()?;
    let profile = final_state.y_average();
    let (a, _) = refine_max_1d(&profile, final_state.grid().lx());
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "y-averaged maximum must be positive, got {a}"
        )));
    }
    Ok(SolitonParams::speed_for_amplitude(p, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
}

/// Refined strict local maxima (over the 8 periodic neighbours) with height
/// at least `threshold_frac` of the global maximum, thinned greedily so that
/// retained peaks are at least `min_separation` apart. Ordered by
/// descending amplitude, ties by `x` then `y`.
pub fn detect_peaks(u: &Field, threshold_frac: f64, min_separation: f64) -> Vec<Peak> {
    let g = *u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (global, _, _) = sup_norm_refined(u);
    let top = u.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Vec::new();
    }
    let floor = threshold_frac * global.max(top);
    let mut found = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let v = u.at(i, j);
            if v < floor {
                continue;
            }
            let strict = (0..3).all(|a| {
                (0..3).all(|b| {
                    (a == 1 && b == 1) || v > u.at((i + nx + a - 1) % nx, (j + ny + b - 1) % ny)
                })
            });
            if strict {
                let (amp, x, y) = refine_at(u, i, j, 1.0);
                found.push(Peak { x, y, amplitude: amp });
            }
        }
    }
    found.sort_by(|a, b| {
        b.amplitude
            .total_cmp(&a.amplitude)
            .then(a.x.total_cmp(&b.x))
            .then(a.y.total_cmp(&b.y))
    });
    let mut kept: Vec<Peak> = Vec::new();
    for pk in found {
        if kept
            .iter()
            .all(|q| g.periodic_distance((q.x, q.y), (pk.x, pk.y)) >= min_separation)
        {
            kept.push(pk);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpFit {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    pub c_fitted: f64,
    /// Sup of the residual within `3/√c_fitted` of the peak over `amplitude`.
    pub residual_rel: f64,
}

#[derive(Debug, Clone)]
pub struct LumpFitResult {
    pub peaks: Vec<LumpFit>,
    pub global_residual_rel: f64,
    /// `u` minus all fitted lumps.
    pub residual: Field,
}

/// Subtracts one rescaled ground state per peak, each centred at the
/// spectrally refined maximum near the detected peak and scaled to its
/// height.
pub fn fit_lumps(u: &Field, p: u32, base: &LumpProfile, peaks: &[Peak]) -> Result<LumpFitResult> {
    check_power(p)?;
    if base.p != p {
        return Err(Error::InvalidParameter(format!(
            "base lump has p = {}, fit requested for p = {p}",
            base.p
        )));
    }
    u.ensure_finite()?;
    let g = *u.grid();
    if peaks.is_empty() {
        return Ok(LumpFitResult {
            peaks: Vec::new(),
            global_residual_rel: 0.0,
            residual: u.clone(),
        });
    }
    let interp = SpectralInterpolant::from_field(u)?;
    let q0 = base.peak();
    let mut residual = u.clone();
    let mut fits = Vec::with_capacity(peaks.len());
    for pk in peaks {
        let (amp, x, y) = interp.refine_max(pk.x, pk.y, (g.dx(), g.dy()));
        if !(amp > 0.0) {
            return Err(Error::InvalidParameter(format!("peak at ({x}, {y}) is not positive")));
        }
        let c_fitted = (amp / q0).powi(p as i32 - 1);
        let lump = base.place(&g, c_fitted, (x, y))?;
        for (r, l) in residual.values_mut().iter_mut().zip(lump.values()) {
            *r -= l;
        }
        fits.push(LumpFit {
            x,
            y,
            amplitude: amp,
            c_fitted,
            residual_rel: 0.0,
        });
    }
    for f in &mut fits {
        let radius = 3.0 / f.c_fitted.sqrt();
        let mut worst = 0.0_f64;
        for i in 0..g.nx() {
            let dx = g.wrap_x(g.x(i) - f.x);
            if dx.abs() > radius {
                continue;
            }
            for j in 0..g.ny() {
                let dy = g.wrap_y(g.y(j) - f.y);
                if dx * dx + dy * dy <= radius * radius {
                    worst = worst.max(residual.at(i, j).abs());
                }
            }
        }
        f.residual_rel = worst / f.amplitude;
    }
    fits.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude).then(a.x.total_cmp(&b.x)).then(a.y.total_cmp(&b.y)));
    let global_residual_rel = residual.max_abs() / u.max_abs();
    Ok(LumpFitResult {
        peaks: fits,
        global_residual_rel,
        residual,
    })
}

/// Result of fitting `log10 |u|_∞ = -q·log10(t* - t) + r`, i.e.
/// `|u|_∞ ~ (t* - t)^{-q}`. The least-squares slope is `-q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFit {
    pub t_star: f64,
    pub q: f64,
    pub r: f64,
    /// Inclusive sample indices.
    pub window: (usize, usize),
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// Trailing samples with `mass_rel_err < mass_tol` and
    /// `sup_norm > amplitude_factor · sup_norm[0]`, at most `max_samples`,
    /// cut back to the trailing strictly increasing run.
    Auto {
        mass_tol: f64,
        amplitude_factor: f64,
        max_samples: usize,
    },
    /// Explicit inclusive index range.
    Range(usize, usize),
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Auto {
            mass_tol: 1e-4,
            amplitude_factor: 2.0,
            max_samples: 40_000,
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;
pub const SPAN_FACTOR: f64 = 10.0;
pub const T_STAR_TOL: f64 = 1e-10;

pub fn select_window(series: &DiagnosticsSeries, policy: WindowPolicy) -> Result<(usize, usize)> {
    let s = series.samples();
    if s.is_empty() {
        return Err(Error::Fit("empty series".into()));
    }
    let (first, last) = match policy {
        WindowPolicy::Range(a, b) => {
            if a > b || b >= s.len() {
                return Err(Error::Fit(format!("window {a}..={b} outside 0..{}", s.len())));
            }
            (a, b)
        }
        WindowPolicy::Auto {
            mass_tol,
            amplitude_factor,
            max_samples,
        } => {
            let sup0 = s[0].sup_norm;
            let ok = |k: usize| s[k].mass_rel_err < mass_tol && s[k].sup_norm > amplitude_factor * sup0;
            let last = (0..s.len())
                .rev()
                .find(|&k| ok(k))
                .ok_or_else(|| Error::Fit("no sample satisfies the window criteria".into()))?;
            let mut first = last;
            while first > 0 && ok(first - 1) && last - first + 1 < max_samples {
                first -= 1;
            }
            while first < last && !(s[first].sup_norm < s[first + 1].sup_norm) {
                first += 1;
            }
            let mut k = last;
            while k > first && s[k - 1].sup_norm < s[k].sup_norm {
                k -= 1;
            }
            (k, last)
        }
    };
    if last + 1 - first < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "window {first}..={last} has {} samples, at least {MIN_FIT_SAMPLES} needed",
            last + 1 - first
        )));
    }
    if let Some(k) = (first..last).find(|&k| !(s[k].sup_norm < s[k + 1].sup_norm)) {
        return Err(Error::Fit(format!(
            "sup norm not strictly increasing over the window (samples {k} and {})",
            k + 1
        )));
    }
    Ok((first, last))
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, ssr)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    (slope, intercept, ssr)
}

/// Fits `(t*, q, r)` over the window chosen by `policy`. The profiled
/// objective in `t*` is scanned over `(t_last, t_last + 10·duration]` on a
/// logarithmic grid of offsets and the best bracket is refined by
/// golden-section search.
pub fn fit_blowup(series: &DiagnosticsSeries, policy: WindowPolicy) -> Result<BlowupFit> {
    let (first, last) = select_window(series, policy)?;
    let s = &series.samples()[first..=last];
    let t: Vec<f64> = s.iter().map(|v| v.t).collect();
    let y: Vec<f64> = s.iter().map(|v| v.sup_norm.log10()).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("sup norm must be positive and finite over the window".into()));
    }
    let t_last = t[t.len() - 1];
    let span = SPAN_FACTOR * (t_last - t[0]);
    let mut xs = vec![0.0; t.len()];
    let mut objective = |offset: f64| {
        let ts = t_last + offset;
        for (x, ti) in xs.iter_mut().zip(&t) {
            *x = (ts - ti).log10();
        }
        line_fit(&xs, &y)
    };

    // the smallest offset still resolves t* against t_last in double precision
    let lo = (span * 1e-12).max(t_last.abs() * 1e-14).max(f64::MIN_POSITIVE);
    let points = 400;
    let ratio = (span / lo).ln() / (points - 1) as f64;
    let offsets: Vec<f64> = (0..points).map(|k| lo * (ratio * k as f64).exp()).collect();
    let ssr: Vec<f64> = offsets.iter().map(|&o| objective(o).2).collect();
    let kbest = (0..points).min_by(|&a, &b| ssr[a].total_cmp(&ssr[b])).unwrap_or(0);
    let (mut a, mut b) = (
        if kbest == 0 { 0.0 } else { offsets[kbest - 1] },
        offsets[(kbest + 1).min(points - 1)],
    );
    if kbest == points - 1 {
        warn!("blow-up fit: best t* at the end of the search span");
    }
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c).2, objective(d).2);
    while b - a > T_STAR_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c).2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d).2;
        }
    }
    let mut best = 0.5 * (a + b);
    if objective(best).2 > ssr[kbest] {
        best = offsets[kbest];
    }
    let (slope, r, ssr_best) = objective(best);
    debug!("blow-up fit over {first}..={last}: offset {best:.3e}, ssr {ssr_best:.3e}");
    Ok(BlowupFit {
        t_star: t_last + best,
        q: -slope,
        r,
        window: (first, last),
        rms_residual: (ssr_best / t.len() as f64).sqrt(),
    })
}

/// Moves `u` by whole cells with periodic wrap.
pub fn roll(u: &Field, di: isize, dj: isize) -> Field {
    let g: Grid = *u.grid();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    Field::from_fn_indexed(g, |i, j| {
        let si = (i as isize - di).rem_euclid(nx) as usize;
        let sj = (j as isize - dj).rem_euclid(ny) as usize;
        u.at(si, sj)
    })
}
