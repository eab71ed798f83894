//! Experiment configuration files.
//!
//! ```json
//! {
//!   "domain":  {"lengths": [1.0, 1.0], "cells": [64, 64]},
//!   "params":  {"alpha": 1, "beta": 1, "gamma": 1, "delta": 1, "chi": 1, "xi": 1, "rho": 0.5},
//!   "initial": {"kind": "gaussian-bump", "center": [0.5, 0.5], "width": 0.1, "amplitude": 1.0},
//!   "stepper": {"t_end": 0.5, "scheme": "explicit-upwind"},
//!   "diagnostics": {"p": [2.0], "sample_every": 10},
//!   "output": {"dir": "out"}
//! }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chemo_core::bounds::SuppliedConstants;
use chemo_core::model::{validate_params, DomainSpec, InitialData, InitialShape, ModelParams};
use chemo_core::transport::{Scheme, StepperConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub params: ModelParams,
    pub initial: InitialData,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Parallel sweep points; `SIM_WORKERS` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepperSection {
    #[serde(flatten)]
    pub config: StepperConfig,
    pub t_end: f64,
    pub max_steps: Option<u64>,
    /// Absolute `max u` threshold; default `1e6 * m / |Ω|`.
    pub blowup_threshold: Option<f64>,
    pub steady_tol: f64,
}

impl Default for StepperSection {
    fn default() -> Self {
        Self { config: StepperConfig::default(), t_end: 1.0, max_steps: None, blowup_threshold: None, steady_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsSection {
    pub p: Vec<f64>,
    pub sample_every: usize,
    /// Evaluate the bounds report for `p[0]` and fill `rhs_bound`.
    pub with_bounds: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { p: vec![2.0], sample_every: 10, with_bounds: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsSection {
    /// Energy exponent; default `3n/4`.
    pub p: Option<f64>,
    pub c_gn: Option<f64>,
    pub c_e: Option<f64>,
}

impl BoundsSection {
    pub fn supplied(&self) -> SuppliedConstants {
        SuppliedConstants { c_gn: self.c_gn, c_e: self.c_e }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write a `u` snapshot every this many steps (0: initial and final only).
    pub snapshot_every: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), snapshot_every: 0 }
    }
}

/// One swept parameter: a coefficient name, `rho`, or `mass`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

pub const SWEEP_AXES: [&str; 8] = ["alpha", "beta", "gamma", "delta", "chi", "xi", "rho", "mass"];

/// Command-line overrides shared by `simulate` and `sweep`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub t_end: Option<f64>,
    pub snapshot_every: Option<u64>,
    pub blowup_threshold: Option<f64>,
    pub scheme: Option<Scheme>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses JSON, naming the offending field path and line on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config error at `{}`: {}", path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative `from-file` paths resolve against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        if let InitialShape::FromFile { path: data } = &mut cfg.initial.shape {
            if data.is_relative() {
                if let Some(parent) = path.parent() {
                    *data = parent.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_params(&self.params).context("params")?;
        self.domain.grid().context("domain")?;
        self.stepper.config.validate().context("stepper")?;
        if !(self.stepper.t_end >= 0.0) {
            bail!("stepper.t_end must be nonnegative");
        }
        if self.diagnostics.p.is_empty() || self.diagnostics.p.iter().any(|p| !(*p > 1.0)) {
            bail!("diagnostics.p must be a nonempty list of exponents > 1");
        }
        if let Some(sweep) = &self.sweep {
            if !SWEEP_AXES.contains(&sweep.axis.as_str()) {
                bail!("sweep.axis `{}` is not one of {:?}", sweep.axis, SWEEP_AXES);
            }
        }
        if self.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.t_end {
            self.stepper.t_end = t;
        }
        if let Some(k) = o.snapshot_every {
            self.output.snapshot_every = k;
        }
        if let Some(b) = o.blowup_threshold {
            self.stepper.blowup_threshold = Some(b);
        }
        if let Some(s) = o.scheme {
            self.stepper.config.scheme = s;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
    }

    /// Copy with one sweep coordinate set.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let p = &mut cfg.params;
        match axis {
            "alpha" => p.alpha = value,
            "beta" => p.beta = value,
            "gamma" => p.gamma = value,
            "delta" => p.delta = value,
            "chi" => p.chi = value,
            "xi" => p.xi = value,
            "rho" => p.rho = value,
            "mass" => cfg.initial = InitialData { mass: Some(value), ..cfg.initial },
            other => bail!("unknown sweep axis `{other}`"),
        }
        cfg.sweep = None;
        Ok(cfg)
    }

    /// Worker count: `SIM_WORKERS`, then the config, then the number of CPUs.
    pub fn worker_count(&self) -> Result<usize> {
        if let Ok(v) = std::env::var("SIM_WORKERS") {
            let n: usize = v.trim().parse().with_context(|| format!("SIM_WORKERS={v:?}"))?;
            if n == 0 {
                bail!("SIM_WORKERS must be at least 1");
            }
            return Ok(n);
        }
        Ok(self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}
