//! Acceptance checks, one line per criterion.
//!
//! `cargo test --test acceptance` runs the quick criteria. Set
//! `ZK_ACCEPTANCE=standard` to add the minute-scale stability runs (5, 6)
//! and `ZK_ACCEPTANCE=slow` to add the long lump and blow-up runs (7, 8, 9).
//! `ZK_ACCEPTANCE_ONLY=7,9` runs just the listed criteria. The process
//! exits non-zero when any criterion that ran failed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use zk_core::analysis::{detect_peaks, fit_blowup, fit_lumps, fit_soliton_speed, WindowPolicy};
use zk_core::diagnostics::{DiagnosticsSample, DiagnosticsSeries, COLUMNS};
use zk_core::grid::{Field, Grid};
use zk_core::initial_data::{build_initial_data, line_soliton, PerturbationSpec, SolitonParams};
use zk_core::io::series::{parse_series, write_series_to};
use zk_core::io::snapshot::{decode_snapshot, encode_snapshot};
use zk_core::lump::{default_lump_grid, petviashvili, rescale_lump, DEFAULT_MAX_ITER, DEFAULT_TOL};
use zk_core::timestepper::{etdrk4_run, Etdrk4, RunResult, SolverConfig, StopReason};

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Tier {
    Quick,
    Standard,
    Slow,
}

impl Tier {
    fn from_env() -> Self {
        match std::env::var("ZK_ACCEPTANCE").as_deref() {
            Ok("slow") => Tier::Slow,
            Ok("standard") => Tier::Standard,
            _ => Tier::Quick,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Tier::Quick => "quick",
            Tier::Standard => "standard",
            Tier::Slow => "slow",
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (u32, &'static str, Tier, fn() -> Outcome);

fn run(p: u32, grid: Grid, u0: &Field, t_end: f64, nt: usize, output_every: usize, dealias: bool) -> RunResult {
    let mut cfg = SolverConfig::new(p, grid, t_end, nt).expect("solver config");
    cfg.output_every = output_every;
    cfg.dealias = dealias;
    etdrk4_run(u0, &cfg).expect("run")
}

fn c1_linear_exactness() -> Outcome {
    let g = Grid::new(1.0, 1.0, 64, 64).unwrap();
    let (kx, ky) = (3.0, 2.0);
    let (dt, steps) = (0.01, 100);
    let u0 = Field::from_fn(g, |x, y| (kx * x + ky * y).cos());
    let mut stepper = Etdrk4::new(g, 2, dt, false, true).unwrap();
    let u = stepper.advance(&u0, steps).unwrap();
    let t = dt * steps as f64;
    let omega = kx * (kx * kx + ky * ky);
    let exact = Field::from_fn(g, |x, y| (kx * x + ky * y + omega * t).cos());
    let err = u.max_abs_diff(&exact);
    check(err < 1e-10, format!("sup error {err:.2e} after {steps} steps (tol 1e-10)"))
}

fn translation_error(nt: usize) -> (f64, RunResult) {
    let g = Grid::new(50.0, 1.0, 4096, 16).unwrap();
    let params = SolitonParams::new(2, 1.0, 0.0).unwrap();
    let u0 = line_soliton(&params, &g).unwrap();
    let res = run(2, g, &u0, 1.0, nt, nt, false);
    let shifted = SolitonParams::new(2, 1.0, params.c * res.final_time).unwrap();
    let exact = line_soliton(&shifted, &g).unwrap();
    (res.final_field.max_abs_diff(&exact), res)
}

fn c2_soliton_translation() -> Outcome {
    let (err, res) = translation_error(2000);
    let s = res.series.samples();
    let (first, last) = (s[0], s[s.len() - 1]);
    let mass = ((last.mass - first.mass) / first.mass).abs();
    let mean = ((last.mean_integral - first.mean_integral) / first.mean_integral).abs();
    check(
        err <= 1e-6 && mass <= 1e-10 && mean <= 1e-10,
        format!("sup error {err:.2e} (tol 1e-6), mass drift {mass:.1e}, mean drift {mean:.1e} (tol 1e-10)"),
    )
}

fn c3_order() -> Outcome {
    let errs: Vec<f64> = [100, 200, 400].iter().map(|&nt| translation_error(nt).0).collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    check(
        ratios.iter().all(|r| (12.0..=20.0).contains(r)),
        format!(
            "errors {:.2e}, {:.2e}, {:.2e} at Nt=100,200,400; ratios {:.2}, {:.2} (band [12, 20])",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    )
}

fn c4_scaling() -> Outcome {
    let (p, lambda) = (2u32, 2.0f64);
    let g = Grid::new(10.0, 5.0, 256, 128).unwrap();
    let params = SolitonParams::new(p, 1.0, 0.0).unwrap();
    let u0 = build_initial_data(&params, &PerturbationSpec::gaussian(0.1, 3.0), &g).unwrap();
    let (t, nt) = (0.5, 500);
    let u = Etdrk4::new(g, p, t / nt as f64, false, false).unwrap().advance(&u0, nt).unwrap();

    // v(x, y, t) = λ^{2/(p-1)} u(λx, λy, λ³t) on the grid shrunk by λ
    let amp = lambda.powf(2.0 / (p as f64 - 1.0));
    let gs = g.scaled(lambda).unwrap();
    let scale = |f: &Field, grid: Grid| Field::from_values(grid, f.values().iter().map(|v| amp * v).collect()).unwrap();
    let v0 = scale(&u0, gs);
    let ts = t / lambda.powi(3);
    let v = Etdrk4::new(gs, p, ts / nt as f64, false, false).unwrap().advance(&v0, nt).unwrap();
    let err = v.max_abs_diff(&scale(&u, gs));
    check(err <= 1e-6, format!("lambda=2, p=2: sup difference {err:.2e} (tol 1e-6)"))
}

fn stability_run(pert: PerturbationSpec) -> (f64, f64, f64) {
    let g = Grid::new(100.0, 1.0, 4096, 64).unwrap();
    let params = SolitonParams::new(2, 0.75, 0.0).unwrap();
    let u0 = build_initial_data(&params, &pert, &g).unwrap();
    let res = run(2, g, &u0, 1.0, 2000, 10, false);
    let sup = res.series.sup_norms();
    let tail = &sup[sup.len() * 4 / 5..];
    let (lo, hi) = tail.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let drift = (hi - lo) / (tail.iter().sum::<f64>() / tail.len() as f64);
    let ratio = fit_soliton_speed(&res.final_field, 2).unwrap() / params.c;
    (drift, ratio, res.final_time)
}

fn c5_subcritical_gaussian() -> Outcome {
    let (drift, ratio, t) = stability_run(PerturbationSpec::gaussian(0.1, 3.0));
    check(
        drift < 0.01 && (0.98..=1.005).contains(&ratio),
        format!("t={t}: last-20% sup drift {drift:.2e} (tol 1e-2), c_F/c = {ratio:.5} (band [0.98, 1.005])"),
    )
}

fn c6_subcritical_periodic() -> Outcome {
    let (drift, ratio, t) = stability_run(PerturbationSpec::cosine_modulated(0.1, 1.0, 0.0));
    check(
        (0.95..=1.0).contains(&ratio),
        format!("t={t}: c_F/c = {ratio:.5} (band [0.95, 1.00]), last-20% sup drift {drift:.2e}"),
    )
}

fn c7_lumps() -> Outcome {
    let g = Grid::new(10.0, 10.0, 512, 512).unwrap();
    let params = SolitonParams::new(2, 1.0, 0.0).unwrap();
    let u0 = build_initial_data(&params, &PerturbationSpec::gaussian(0.1, 3.0), &g).unwrap();
    let res = run(2, g, &u0, 45.0, 45_000, 100, false);
    let base = petviashvili(2, 1.0, &default_lump_grid(2, 1.0).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let peaks = detect_peaks(&res.final_field, 0.3, 1.0);
    if peaks.is_empty() {
        return check(false, format!("stop {} at t={}: no peaks", res.stop_reason, res.final_time));
    }
    let fit = fit_lumps(&res.final_field, 2, &base, &peaks).unwrap();
    let worst = fit.peaks.iter().map(|f| f.residual_rel).fold(0.0, f64::max);
    let listing: Vec<String> = fit
        .peaks
        .iter()
        .map(|f| format!("({:.2}, {:.2}) A={:.4} c={:.4} res={:.2e}", f.x, f.y, f.amplitude, f.c_fitted, f.residual_rel))
        .collect();
    check(
        peaks.len() >= 2 && worst <= 0.05,
        format!(
            "stop {} at t={:.3}: {} peaks (need >= 2), worst local residual {worst:.3e} (tol 5e-2); {}",
            res.stop_reason,
            res.final_time,
            peaks.len(),
            listing.join("; ")
        ),
    )
}

fn blowup_check(res: &RunResult, band: (f64, f64), rms_tol: Option<f64>) -> Outcome {
    let head = format!("stop {} at t={:.5}", res.stop_reason, res.final_time);
    match fit_blowup(&res.series, WindowPolicy::default()) {
        Ok(f) => {
            let rms_ok = rms_tol.is_none_or(|tol| f.rms_residual < tol);
            check(
                res.stop_reason == StopReason::MassDrift && (band.0..=band.1).contains(&f.q) && rms_ok,
                format!(
                    "{head}: q = {:.4} (band [{}, {}]), t* = {:.5}, rms {:.2e}{}, window {}..={}",
                    f.q,
                    band.0,
                    band.1,
                    f.t_star,
                    f.rms_residual,
                    rms_tol.map(|t| format!(" (tol {t})")).unwrap_or_default(),
                    f.window.0,
                    f.window.1
                ),
            )
        }
        Err(e) => check(false, format!("{head}: {e}")),
    }
}

fn c8_critical_blowup() -> Outcome {
    let g = Grid::new(10.0, 10.0, 1024, 512).unwrap();
    let params = SolitonParams::new(3, 2.0, 0.0).unwrap();
    let pert = PerturbationSpec::cosine_modulated(0.1, g.ly(), PI / 2.0);
    let u0 = build_initial_data(&params, &pert, &g).unwrap();
    let res = run(3, g, &u0, 4.0, 16_000, 1, false);
    blowup_check(&res, (0.55, 0.85), Some(0.02))
}

fn c9_supercritical_blowup() -> Outcome {
    // at 1024×512 the last samples before the mass stop are under-resolved and bias q upward
    let g = Grid::new(10.0, 10.0, 2048, 1024).unwrap();
    let params = SolitonParams::new(4, 2.0, 0.0).unwrap();
    let u0 = build_initial_data(&params, &PerturbationSpec::gaussian(0.1, 3.0), &g).unwrap();
    let res = run(4, g, &u0, 1.0, 8000, 1, true);
    blowup_check(&res, (0.17, 0.33), None)
}

/// Peak of the radial ground state of `Q'' + Q'/r - Q + Q² = 0` by shooting.
fn shooting_peak_p2() -> f64 {
    // +1: Q turned back up before crossing zero (peak too small), -1: crossed zero
    let classify = |a: f64| -> f64 {
        let h = 1e-3;
        let mut r = h;
        let mut y = [a + (a - a * a) * h * h / 4.0, (a - a * a) * h / 2.0];
        let f = |r: f64, y: [f64; 2]| [y[1], -y[1] / r + y[0] - y[0] * y[0]];
        while r < 40.0 {
            let k1 = f(r, y);
            let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for d in 0..2 {
                y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
            r += h;
            if y[0] < 0.0 {
                return -1.0;
            }
            if y[1] > 0.0 {
                return 1.0;
            }
        }
        0.0
    };
    let (mut lo, mut hi) = (1.5, 3.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match classify(mid) {
            s if s > 0.0 => lo = mid,
            s if s < 0.0 => hi = mid,
            _ => return mid,
        }
    }
    0.5 * (lo + hi)
}

fn c10_ground_states() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut p2_peak = 0.0;
    for p in 2..=4 {
        let g = default_lump_grid(p, 1.0).unwrap();
        let base = petviashvili(p, 1.0, &g, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let c = 2.0;
        let scaled = rescale_lump(&base, c).unwrap();
        let direct = petviashvili(p, c, &g, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let scal = scaled.values.max_abs_diff(&direct.values) / direct.peak();
        pass &= base.residual < 1e-10 && scal < 1e-8;
        notes.push(format!("p={p}: residual {:.1e}, rescale vs direct {scal:.1e}", base.residual));
        if p == 2 {
            p2_peak = base.peak();
        }
    }
    let oracle = shooting_peak_p2();
    let peak_err = (p2_peak - oracle).abs();
    pass &= peak_err < 1e-6;
    check(
        pass,
        format!(
            "{} (tol 1e-10, 1e-8); p=2 peak {p2_peak:.10} vs shooting {oracle:.10}, diff {peak_err:.1e} (tol 1e-6)",
            notes.join("; ")
        ),
    )
}

fn c11_fitter_round_trips() -> Outcome {
    // exact power laws
    let mut blowup_err: f64 = 0.0;
    for (q, t_star, r) in [(0.7, 3.858, 1.0), (0.249, 1.2134, 0.3)] {
        let samples: Vec<DiagnosticsSample> = (0..200)
            .map(|k| {
                let t = t_star * 0.99 * k as f64 / 199.0;
                let mut row = [0.0; 10];
                row[0] = t;
                row[1] = 10f64.powf(r) * (t_star - t).powf(-q);
                DiagnosticsSample::from_row(row)
            })
            .collect();
        let series = DiagnosticsSeries::from_samples(samples).unwrap();
        let f = fit_blowup(&series, WindowPolicy::Range(0, 199)).unwrap();
        blowup_err = blowup_err.max((f.q - q).abs()).max((f.t_star - t_star).abs()).max((f.r - r).abs());
    }

    let mut speed_err: f64 = 0.0;
    let g = Grid::new(50.0, 1.0, 4096, 8).unwrap();
    for p in 2..=4 {
        for c in [0.25, 0.75, 2.0] {
            let u = line_soliton(&SolitonParams::new(p, c, 0.37 * g.dx()).unwrap(), &g).unwrap();
            speed_err = speed_err.max((fit_soliton_speed(&u, p).unwrap() / c - 1.0).abs());
        }
    }

    let base = petviashvili(2, 1.0, &default_lump_grid(2, 1.0).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let target = Grid::new(12.0, 12.0, 512, 512).unwrap();
    let centre = (target.x(300), target.y(200));
    let u = base.place(&target, 1.3, centre).unwrap();
    let fit = fit_lumps(&u, 2, &base, &detect_peaks(&u, 0.3, 1.0)).unwrap();
    let lump_res = fit.peaks.iter().map(|f| f.residual_rel).fold(0.0, f64::max);

    check(
        blowup_err < 1e-6 && speed_err < 1e-10 && fit.peaks.len() == 1 && lump_res < 1e-8,
        format!(
            "fit_blowup max param error {blowup_err:.1e} (tol 1e-6), fit_soliton_speed rel error {speed_err:.1e} (tol 1e-10), \
             fit_lumps {} peak residual {lump_res:.1e} (tol 1e-8)",
            fit.peaks.len()
        ),
    )
}

fn c12_formats() -> Outcome {
    let g = Grid::new(3.5, 0.25, 16, 8).unwrap();
    let specials = [0.0, -0.0, f64::MIN_POSITIVE, 5e-324, f64::MAX, -1.0 / 3.0, PI];
    let f = Field::from_fn_indexed(g, |i, j| specials[(i * 8 + j) % specials.len()] / (1.0 + i as f64 * 1e-3));
    let bytes = encode_snapshot(&f, 2.75);
    let snap = decode_snapshot(&bytes, std::path::Path::new("mem")).unwrap();
    let bit_identical = snap.t.to_bits() == 2.75f64.to_bits()
        && snap.field.grid() == &g
        && snap.field.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits())
        && encode_snapshot(&snap.field, snap.t) == bytes;

    let rows: Vec<DiagnosticsSample> = (0..5)
        .map(|k| {
            let mut row = [0.0; 10];
            for (c, v) in row.iter_mut().enumerate() {
                *v = (k as f64 + 1.0) / 7.0 + c as f64 * 1e-17 - if c == 3 { 9.5 } else { 0.0 };
            }
            DiagnosticsSample::from_row(row)
        })
        .collect();
    let series = DiagnosticsSeries::from_samples(rows).unwrap();
    let mut buf = Vec::new();
    write_series_to(&mut buf, &series).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header_ok = text.lines().next() == Some(&COLUMNS.join(","))
        && text.lines().skip(1).all(|l| l.split(',').count() == COLUMNS.len());
    let round_trip = parse_series(&text, std::path::Path::new("mem")).unwrap() == series;
    check(
        bit_identical && header_ok && round_trip,
        format!("ZKSNAP01 bitwise {bit_identical}; series.csv header/columns {header_ok}, lossless {round_trip}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "linear exactness", Tier::Quick, c1_linear_exactness),
        (2, "soliton translation", Tier::Quick, c2_soliton_translation),
        (3, "fourth-order convergence", Tier::Quick, c3_order),
        (4, "scaling symmetry", Tier::Quick, c4_scaling),
        (5, "subcritical stability, gaussian", Tier::Standard, c5_subcritical_gaussian),
        (6, "subcritical stability, periodic", Tier::Standard, c6_subcritical_periodic),
        (7, "lump formation", Tier::Slow, c7_lumps),
        (8, "critical blow-up rate", Tier::Slow, c8_critical_blowup),
        (9, "supercritical blow-up rate", Tier::Slow, c9_supercritical_blowup),
        (10, "ground states", Tier::Quick, c10_ground_states),
        (11, "fitter round-trips", Tier::Quick, c11_fitter_round_trips),
        (12, "file formats", Tier::Quick, c12_formats),
    ];
    let tier = Tier::from_env();
    // comma-separated criterion numbers; runs those whatever the tier
    let only: Option<Vec<u32>> = std::env::var("ZK_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    println!("acceptance tier: {}", tier.name());
    let mut failed = 0;
    for (id, name, needs, f) in criteria {
        if let Some(ids) = &only {
            if !ids.contains(&id) {
                continue;
            }
        } else if needs > tier {
            println!("criterion {id:2} SKIP {name}: needs ZK_ACCEPTANCE={}", needs.name());
            continue;
        }
        let start = Instant::now();
        let out = f();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!out.pass);
        println!(
            "criterion {id:2} {verdict} {name}: {} [{:.1}s]",
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
