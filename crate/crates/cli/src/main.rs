use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use zk_core::analysis::{
    detect_peaks, fit_blowup, fit_lumps, fit_soliton_speed, BlowupFit, WindowPolicy, DEFAULT_MIN_SEPARATION,
    DEFAULT_THRESHOLD_FRAC,
};
use zk_core::grid::Grid;
use zk_core::io::{read_config, read_series, read_snapshot, run_experiment, write_snapshot};
use zk_core::lump::{default_half_period, petviashvili, stationary_defect, LumpProfile, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Pseudospectral solver and fitters for the generalized
/// Zakharov–Kuznetsov equation on a torus.
#[derive(Parser)]
#[command(name = "zk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Directory for output files.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Compute a ground-state lump with the Petviashvili iteration.
    Groundstate {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Points per direction (default 512, 1024 for p = 4).
        #[arg(long)]
        n: Option<usize>,
        /// Half-period scale of the square grid (default 10/√c).
        #[arg(long)]
        half_period: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Fit `|u|_∞ ~ (t* - t)^{-q}` to a series file.
    FitBlowup {
        series: PathBuf,
        /// First sample index of an explicit window (with --last).
        #[arg(long, requires = "last")]
        first: Option<usize>,
        #[arg(long, requires = "first")]
        last: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        mass_tol: f64,
        #[arg(long, default_value_t = 2.0)]
        amplitude_factor: f64,
        #[arg(long, default_value_t = 40_000)]
        max_samples: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Speed of the line soliton matching a snapshot's y-averaged maximum.
    FitSoliton {
        snapshot: PathBuf,
        #[arg(long)]
        p: u32,
        /// Initial speed, to report the ratio c_F/c.
        #[arg(long)]
        c: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Fit rescaled ground states to the peaks of a snapshot.
    FitLumps {
        snapshot: PathBuf,
        /// Snapshot of a c = 1 ground state from `groundstate`.
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_FRAC)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_MIN_SEPARATION)]
        min_separation: f64,
        #[command(flatten)]
        out: OutDir,
    },
}

fn write_result(out: &OutDir, name: &str, line: &str) -> Result<()> {
    if let Some(dir) = &out.output_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, format!("{line}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{line}");
    Ok(())
}

fn blowup_line(fit: &BlowupFit) -> String {
    format!(
        "t_star={:.12e} q={:.12e} r={:.12e} first={} last={} rms_residual={:.6e}",
        fit.t_star, fit.q, fit.r, fit.window.0, fit.window.1, fit.rms_residual
    )
}

fn load_base(path: &Path, p: u32) -> Result<LumpProfile> {
    let snap = read_snapshot(path)?;
    let residual = stationary_defect(&snap.field, p, 1.0)?;
    if residual.is_nan() || residual >= 1e-8 {
        bail!(
            "{} is not a c = 1 ground state for p = {p} (stationary defect {residual:.3e})",
            path.display()
        );
    }
    Ok(LumpProfile {
        values: snap.field,
        c: 1.0,
        p,
        residual,
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, out } => {
            let mut cfg = read_config(&config)?;
            if let Some(dir) = out.output_dir {
                cfg.output_dir = dir;
            }
            let res = run_experiment(&cfg)?;
            println!(
                "label={} stop_reason={} steps={} final_time={:?} samples={} output_dir={}",
                cfg.label,
                res.result.stop_reason,
                res.result.steps,
                res.result.final_time,
                res.result.series.len(),
                res.dir.display()
            );
        }
        Command::Groundstate {
            p,
            c,
            n,
            half_period,
            tol,
            max_iter,
            out,
        } => {
            let n = n.unwrap_or(if p >= 4 { 1024 } else { 512 });
            let l = half_period.unwrap_or_else(|| default_half_period(c));
            let grid = Grid::new(l, l, n, n)?;
            let lump = petviashvili(p, c, &grid, tol, max_iter)?;
            let dir = out.output_dir.unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("groundstate_p{p}.zks"));
            write_snapshot(&path, &lump.values, 0.0)?;
            println!(
                "file={} p={p} c={c:?} n={n} half_period={l:?} peak={:.15e} residual={:.3e}",
                path.display(),
                lump.peak(),
                lump.residual
            );
        }
        Command::FitBlowup {
            series,
            first,
            last,
            mass_tol,
            amplitude_factor,
            max_samples,
            out,
        } => {
            let s = read_series(&series)?;
            let policy = match (first, last) {
                (Some(a), Some(b)) => WindowPolicy::Range(a, b),
                _ => WindowPolicy::Auto {
                    mass_tol,
                    amplitude_factor,
                    max_samples,
                },
            };
            let fit = fit_blowup(&s, policy)?;
            write_result(&out, "fit_blowup.txt", &blowup_line(&fit))?;
        }
        Command::FitSoliton { snapshot, p, c, out } => {
            let snap = read_snapshot(&snapshot)?;
            let cf = fit_soliton_speed(&snap.field, p)?;
            let mut line = format!("t={:?} c_F={cf:.15e}", snap.t);
            if let Some(c) = c {
                line.push_str(&format!(" ratio={:.15e}", cf / c));
            }
            write_result(&out, "fit_soliton.txt", &line)?;
        }
        Command::FitLumps {
            snapshot,
            base,
            p,
            threshold,
            min_separation,
            out,
        } => {
            let snap = read_snapshot(&snapshot)?;
            let base = load_base(&base, p)?;
            let peaks = detect_peaks(&snap.field, threshold, min_separation);
            let fit = fit_lumps(&snap.field, p, &base, &peaks)?;
            let worst = fit.peaks.iter().map(|f| f.residual_rel).fold(0.0, f64::max);
            let lumps: Vec<String> = fit
                .peaks
                .iter()
                .map(|f| format!("{:.6}:{:.6}:{:.6e}:{:.3e}", f.x, f.y, f.c_fitted, f.residual_rel))
                .collect();
            let line = format!(
                "t={:?} peaks={} max_residual_rel={worst:.6e} global_residual_rel={:.6e} lumps={}",
                snap.t,
                fit.peaks.len(),
                fit.global_residual_rel,
                lumps.join(";")
            );
            if let Some(dir) = &out.output_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                write_snapshot(dir.join("lump_residual.zks"), &fit.residual, snap.t)?;
            }
            write_result(&out, "fit_lumps.txt", &line)?;
        }
    }
    Ok(())
}
