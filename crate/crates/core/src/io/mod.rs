//! Experiment files and orchestration.

pub mod config;
pub mod series;
pub mod snapshot;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

pub use config::{parse_config, ExperimentConfig};
pub use series::{read_series, write_series};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

use crate::error::{Error, Result};
use crate::initial_data::build_initial_data;
use crate::timestepper::{etdrk4_run, RunResult};

pub const SERIES_FILE: &str = "series.csv";
pub const META_FILE: &str = "run.meta";
pub const FINAL_SNAPSHOT: &str = "final.zks";

pub fn snapshot_file_name(index: usize) -> String {
    format!("snapshot_{index:04}.zks")
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub result: RunResult,
    pub dir: PathBuf,
}

/// `run.meta` text: the full config echo followed by the run outcome.
pub fn meta_text(cfg: &ExperimentConfig, result: &RunResult) -> String {
    let mut out = String::from("# config\n");
    out.push_str(&cfg.to_config_string());
    out.push_str("# outcome\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("stop_reason", result.stop_reason.to_string());
    kv("steps", result.steps.to_string());
    kv("final_time", format!("{:?}", result.final_time));
    kv("samples", result.series.len().to_string());
    kv("snapshots", result.snapshots.len().to_string());
    for (k, (t, _)) in result.snapshots.iter().enumerate() {
        kv(&format!("snapshot_{k:04}"), format!("{} @ {t:?}", snapshot_file_name(k)));
    }
    kv("final_snapshot", FINAL_SNAPSHOT.to_string());
    kv("snapshot_format", "ZKSNAP01".to_string());
    kv("zk_core_version", env!("CARGO_PKG_VERSION").to_string());
    out
}

/// Parses `key = value` lines of a `run.meta` file, skipping comments.
pub fn parse_meta(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Builds the initial data, runs the solver and writes `series.csv`, the
/// requested snapshots, the final state and `run.meta` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let u0 = build_initial_data(&cfg.soliton, &cfg.perturbation, &cfg.solver.grid)?;
    let result = etdrk4_run(&u0, &cfg.solver)?;
    info!(
        "run `{}` finished: {} after {} steps (t = {})",
        cfg.label, result.stop_reason, result.steps, result.final_time
    );
    write_series(dir.join(SERIES_FILE), &result.series)?;
    for (k, (t, f)) in result.snapshots.iter().enumerate() {
        write_snapshot(dir.join(snapshot_file_name(k)), f, *t)?;
    }
    write_snapshot(dir.join(FINAL_SNAPSHOT), &result.final_field, result.final_time)?;
    let meta = dir.join(META_FILE);
    fs::write(&meta, meta_text(cfg, &result)).map_err(|e| Error::io(&meta, e))?;
    Ok(ExperimentOutput { result, dir })
}
