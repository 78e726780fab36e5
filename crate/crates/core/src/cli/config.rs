//! Run configuration: built-in defaults, overridden by a flat `key = value`
//! file, overridden by command-line flags.
//!
//! Recognised keys (one per line, `#` starts a comment):
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `manifest` | dataset manifest path | none |
//! | `out` | output directory | `out` |
//! | `seed` | seed for splits and the gallery subset | `0` |
//! | `trials` | number of train/test splits | `10` |
//! | `train_fraction` | share of identities used for training | `0.5` |
//! | `pca_dims` | reduced dims as `part:local:global` | `120:120:120` |
//! | `max_iters`, `rho`, `eta`, `inner_steps`, `primal_tol`, `dual_tol`, `lambda`, `alpha1`, `alpha2`, `subset_size` | solver settings | see [`SolverConfig`] |
//! | `threads` | worker threads | `1` |
//! | `bitexact` | force the single-threaded pool | `false` |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{ReidError, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub trials: usize,
    pub train_fraction: f64,
    /// Indexed like `RegionKind::index`: part, local, global.
    pub pca_dims: [usize; 3],
    pub solver: SolverConfig,
    pub threads: usize,
    pub bitexact: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            out: PathBuf::from("out"),
            seed: 0,
            trials: 10,
            train_fraction: 0.5,
            pca_dims: [120, 120, 120],
            solver: SolverConfig::default(),
            threads: 1,
            bitexact: false,
        }
    }
}

pub fn parse_pca_dims(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || ReidError::Config(format!("pca_dims must look like part:local:global, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0usize; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
        if *o == 0 {
            return Err(bad());
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| ReidError::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ReidError::Config(format!("invalid value {value:?} for {key}"))),
    }
}

/// Splits a config file into key/value pairs; duplicate keys are an error.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ReidError::Config(format!("line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ReidError::Config(format!("line {}: duplicate key {k}", n + 1)));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.solver;
        match key {
            "manifest" => self.manifest = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "pca_dims" => self.pca_dims = parse_pca_dims(value)?,
            "max_iters" => s.max_iters = parse(key, value)?,
            "rho" => s.rho = parse(key, value)?,
            "eta" => s.eta = parse(key, value)?,
            "inner_steps" => s.inner_steps = parse(key, value)?,
            "primal_tol" => s.primal_tol = parse(key, value)?,
            "dual_tol" => s.dual_tol = parse(key, value)?,
            "lambda" => s.lambda = parse(key, value)?,
            "alpha1" => s.alpha1 = parse(key, value)?,
            "alpha2" => s.alpha2 = parse(key, value)?,
            "subset_size" => s.subset_size = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "bitexact" => self.bitexact = parse_bool(key, value)?,
            _ => return Err(ReidError::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_config_text(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| ReidError::io(path, e))?;
        self.apply_text(&text)
    }

    /// Solver settings with the run seed filled in.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            ..self.solver.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(ReidError::Config("trials must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(ReidError::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.threads == 0 {
            return Err(ReidError::Config("threads must be at least 1".into()));
        }
        if let Some(m) = &self.manifest {
            if !m.is_file() {
                return Err(ReidError::Config(format!("manifest {} does not exist", m.display())));
            }
        }
        self.solver_config().validate()
    }

    pub fn require_manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| ReidError::Config("no manifest given (use --manifest or the manifest key)".into()))
    }

    /// Thread count actually used.
    pub fn effective_threads(&self) -> usize {
        if self.bitexact {
            1
        } else {
            self.threads
        }
    }
}
