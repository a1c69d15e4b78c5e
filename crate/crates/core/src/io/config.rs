//! Flat `key = value` experiment files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are case-sensitive; unknown or repeated keys are errors. Lists
//! (`snapshot_times`) are comma separated. Required keys: `p`, `c`, `Lx`,
//! `Ly`, `Nx`, `Ny`, `t_end`, `Nt`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::initial_data::{PerturbationKind, PerturbationSpec, SolitonParams};
use crate::timestepper::{SolverConfig, DEFAULT_MASS_STOP_TOL};

pub const KEYS: [&str; 20] = [
    "p",
    "c",
    "x0",
    "Lx",
    "Ly",
    "Nx",
    "Ny",
    "t_end",
    "Nt",
    "output_every",
    "snapshot_times",
    "mass_stop_tol",
    "dealias",
    "perturbation",
    "a",
    "b",
    "delta",
    "output_dir",
    "label",
    "workers",
];

const REQUIRED: [&str; 8] = ["p", "c", "Lx", "Ly", "Nx", "Ny", "t_end", "Nt"];

pub const DEFAULT_OUTPUT_DIR: &str = "output";
pub const DEFAULT_LABEL: &str = "run";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub soliton: SolitonParams,
    pub perturbation: PerturbationSpec,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    pub label: String,
    /// Number of worker threads; runs are single-threaded, so this is 1.
    pub workers: usize,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the required keys.
    pub fn new(soliton: SolitonParams, solver: SolverConfig) -> Result<Self> {
        if soliton.p != solver.p {
            return Err(Error::InvalidParameter(format!(
                "soliton p = {} differs from solver p = {}",
                soliton.p, solver.p
            )));
        }
        Ok(Self {
            soliton,
            perturbation: PerturbationSpec::default(),
            solver,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            label: DEFAULT_LABEL.to_string(),
            workers: 1,
        })
    }

    /// Serializes every key; `parse_config` of the output gives back `self`.
    pub fn to_config_string(&self) -> String {
        let s = &self.solver;
        let g = &s.grid;
        let pert = &self.perturbation;
        let times: Vec<String> = s.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("p", s.p.to_string());
        kv("c", format!("{:?}", self.soliton.c));
        kv("x0", format!("{:?}", self.soliton.x0));
        kv("Lx", format!("{:?}", g.lx()));
        kv("Ly", format!("{:?}", g.ly()));
        kv("Nx", g.nx().to_string());
        kv("Ny", g.ny().to_string());
        kv("t_end", format!("{:?}", s.t_end));
        kv("Nt", s.nt.to_string());
        kv("output_every", s.output_every.to_string());
        kv("snapshot_times", times.join(", "));
        kv("mass_stop_tol", format!("{:?}", s.mass_stop_tol));
        kv("dealias", s.dealias.to_string());
        kv("perturbation", pert.kind.as_str().to_string());
        kv("a", format!("{:?}", pert.a));
        kv("b", format!("{:?}", pert.b));
        kv("delta", format!("{:?}", pert.delta));
        kv("output_dir", self.output_dir.display().to_string());
        kv("label", self.label.clone());
        kv("workers", self.workers.to_string());
        out
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(HashMap<String, Entry>);

impl Entries {
    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.0.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|e| e.value.as_str())
    }

    fn get<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        self.get(key, what)?.ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get(key, "a real number")?;
        match v {
            Some(x) if !x.is_finite() => Err(self.err(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be positive, got {v}")))
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map: HashMap<String, Entry> = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            key: content.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        if let Some(prev) = map.get(key) {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: format!("repeated key (first set on line {})", prev.line),
            });
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    let e = Entries(map);
    for key in REQUIRED {
        if e.raw(key).is_none() {
            return Err(Error::MissingKey(key.to_string()));
        }
    }

    let p: u32 = e.required("p", "an integer")?;
    if !matches!(p, 2..=4) {
        return Err(e.err("p", "p must be one of 2,3,4"));
    }
    let c = e.positive("c", e.real("c")?.unwrap_or(0.0))?;
    let x0 = e.real("x0")?.unwrap_or(0.0);
    let lx = e.positive("Lx", e.real("Lx")?.unwrap_or(0.0))?;
    let ly = e.positive("Ly", e.real("Ly")?.unwrap_or(0.0))?;
    let mut sizes = [0usize; 2];
    for (slot, key) in sizes.iter_mut().zip(["Nx", "Ny"]) {
        let n: usize = e.required(key, "an integer")?;
        if n < 2 || !n.is_power_of_two() {
            return Err(e.err(key, format!("must be a power of two >= 2, got {n}")));
        }
        *slot = n;
    }
    let grid = Grid::new(lx, ly, sizes[0], sizes[1])?;
    let t_end = e.positive("t_end", e.real("t_end")?.unwrap_or(0.0))?;
    let nt: usize = e.required("Nt", "a positive integer")?;
    if nt == 0 {
        return Err(e.err("Nt", "must be positive"));
    }
    let output_every: usize = e
        .get("output_every", "a positive integer")?
        .unwrap_or_else(|| SolverConfig::default_output_every(nt));
    if output_every == 0 {
        return Err(e.err("output_every", "must be positive"));
    }
    let snapshot_times = match e.raw("snapshot_times") {
        None => Vec::new(),
        Some("") => Vec::new(),
        Some(v) => v
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite() && (0.0..=t_end).contains(t))
                    .ok_or_else(|| e.err("snapshot_times", format!("`{s}` is not a time in [0, {t_end}]")))
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    let mass_stop_tol = e.positive(
        "mass_stop_tol",
        e.real("mass_stop_tol")?.unwrap_or(DEFAULT_MASS_STOP_TOL),
    )?;
    let dealias: bool = e.get("dealias", "true or false")?.unwrap_or(false);

    let kind = match e.raw("perturbation") {
        None => PerturbationKind::None,
        Some(v) => v.parse().map_err(|m: String| e.err("perturbation", m))?,
    };
    let defaults = PerturbationSpec::default();
    let perturbation = PerturbationSpec {
        kind,
        a: e.real("a")?.unwrap_or(defaults.a),
        b: e.positive("b", e.real("b")?.unwrap_or(defaults.b))?,
        delta: e.real("delta")?.unwrap_or(defaults.delta),
    };

    let output_dir = PathBuf::from(e.raw("output_dir").unwrap_or(DEFAULT_OUTPUT_DIR));
    if output_dir.as_os_str().is_empty() {
        return Err(e.err("output_dir", "must not be empty"));
    }
    let label = e.raw("label").unwrap_or(DEFAULT_LABEL).to_string();
    if label.is_empty() {
        return Err(e.err("label", "must not be empty"));
    }
    let workers: usize = e.get("workers", "a positive integer")?.unwrap_or(1);
    if workers != 1 {
        return Err(e.err("workers", format!("only single-threaded runs are supported, got {workers}")));
    }

    let solver = SolverConfig {
        p,
        grid,
        t_end,
        nt,
        output_every,
        snapshot_times,
        mass_stop_tol,
        dealias,
        linear_only: false,
    };
    solver.validate()?;
    Ok(ExperimentConfig {
        soliton: SolitonParams::new(p, c, x0)?,
        perturbation,
        solver,
        output_dir,
        label,
        workers,
    })
}
