//! `sim` subcommands. Each returns a process exit code: 0 for a run that
//! completed or reached a steady state, 2 when blow-up was suspected, and
//! errors propagate to `main`, which exits with 1.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use chemo_core::bounds::{self, BoundsReport};
use chemo_core::diagnostics::{self, DiagnosticsConfig};
use chemo_core::model::{build_initial_data, classify_regime, Regime};
use chemo_core::transport::{self, BlowupReason, RunOptions, RunReport, Status, Stepper};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Overrides};
use crate::svg::{self, RegimePoint};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_BLOWUP: u8 = 2;

const BLOWUP_NOTE: &str = "blow-up is a proxy: max u above the threshold or the CFL step below dt_min; \
                           the grid caps attainable concentration at about m / h^2";

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Running => "Running",
        Status::SteadyDetected => "SteadyDetected",
        Status::BlowupSuspected => "BlowupSuspected",
        Status::Completed => "Completed",
    }
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub status: &'static str,
    pub blowup_reason: Option<BlowupReason>,
    pub blowup_threshold: f64,
    pub blowup_note: &'static str,
    pub regime: Regime,
    pub theorem_applies: bool,
    pub t_final: f64,
    pub steps: u64,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// `max_n |∫u_n − m| / m`
    pub conservation_drift: f64,
    /// `min_n min u_n / max u_n`
    pub min_positivity_ratio: f64,
    pub final_u_max: f64,
    pub final_energies: BTreeMap<String, f64>,
    pub dt_min_used: f64,
    pub dt_max_used: f64,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        if self.status == "BlowupSuspected" {
            EXIT_BLOWUP
        } else {
            EXIT_OK
        }
    }
}

/// Result of one simulation.
#[derive(Debug)]
pub struct Simulation {
    pub summary: RunSummary,
    pub report: RunReport,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(contents).with_context(|| format!("writing {}", path.display()))
}

/// Runs the configured simulation. With `out` set, writes `diagnostics.csv`,
/// `summary.json`, `energy.svg` and `u` snapshots there.
pub fn simulate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Simulation> {
    let started = Instant::now();
    let grid = cfg.domain.grid().context("domain")?;
    let (u0, mass) = build_initial_data(&cfg.initial, &cfg.domain).context("initial data")?;
    let regime = classify_regime(&cfg.params, mass)?;

    let ps = cfg.diagnostics.p.clone();
    let bounds = if cfg.diagnostics.with_bounds {
        if cfg.params.rho < 1.0 {
            Some(bounds::bounds_report(&cfg.params, &grid, mass, ps[0], cfg.bounds.supplied()).context("bounds")?)
        } else {
            eprintln!("note: rho = 1, energy bounds need sublinear production; rhs_bound left empty");
            None
        }
    } else {
        None
    };
    let diag = DiagnosticsConfig { ps: ps.clone(), sample_every: cfg.diagnostics.sample_every, bounds: bounds.clone() };

    let stepper = Stepper::new(cfg.params, cfg.stepper.config, grid)?;
    let initial = stepper.initial_state(u0)?;
    let opts = RunOptions {
        t_end: cfg.stepper.t_end,
        max_steps: cfg.stepper.max_steps,
        blowup_threshold: cfg.stepper.blowup_threshold,
        steady_tol: cfg.stepper.steady_tol,
    };

    let snap_dir = out.map(|d| d.join("snapshots"));
    if let Some(dir) = &snap_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        initial.u.save_csv(dir.join("u_00000000.csv"))?;
    }
    let every = cfg.output.snapshot_every;
    let mut snap_err = None;
    let report = transport::run(&stepper, initial, &opts, &diag, |s| {
        if let (Some(dir), true) = (&snap_dir, every > 0 && s.step % every == 0) {
            if let Err(e) = s.u.save_csv(dir.join(format!("u_{:08}.csv", s.step))) {
                snap_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = snap_err {
        return Err(e.into());
    }

    let final_energies = diagnostics::sample(&report.state, &ps, None)?
        .energies
        .iter()
        .map(|(p, e)| (format!("E_{p}"), *e))
        .collect();
    let summary = RunSummary {
        status: status_name(report.state.status),
        blowup_reason: report.blowup_reason,
        blowup_threshold: report.blowup_threshold,
        blowup_note: BLOWUP_NOTE,
        regime,
        theorem_applies: regime.theorem_applies(),
        t_final: report.state.t,
        steps: report.state.step,
        initial_mass: report.initial_mass,
        final_mass: chemo_core::grid::integrate(&report.state.u)?,
        conservation_drift: report.max_mass_drift,
        min_positivity_ratio: report.min_positivity_ratio,
        final_u_max: report.state.u.max(),
        final_energies,
        dt_min_used: if report.min_dt.is_finite() { report.min_dt } else { 0.0 },
        dt_max_used: report.max_dt,
        wall_time_s: started.elapsed().as_secs_f64(),
        bounds,
    };

    if let Some(dir) = out {
        let mut csv = Vec::new();
        diagnostics::write_csv(&report.records, &ps, &mut csv)?;
        write_file(&dir.join("diagnostics.csv"), &csv)?;
        write_file(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
        if let Some(snap) = &snap_dir {
            report.state.u.save_csv(snap.join(format!("u_{:08}.csv", report.state.step)))?;
        }
        let series: Vec<(String, Vec<(f64, f64)>)> = ps
            .iter()
            .map(|p| (format!("E_{p}"), report.records.iter().filter_map(|r| Some((r.t, r.energy(*p)?))).collect()))
            .collect();
        write_file(&dir.join("energy.svg"), svg::line_plot("Lp energies", "t", "E_p", &series).as_bytes())?;
    }
    Ok(Simulation { summary, report })
}

/// `sim simulate <cfg>`
pub fn cmd_simulate(path: &Path, overrides: &Overrides) -> Result<u8> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(overrides);
    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating output directory {}", out.display()))?;
    let sim = simulate(&cfg, Some(&out))?;
    eprintln!(
        "{} at t = {:.6e} after {} steps; mass drift {:.3e}; output in {}",
        sim.summary.status,
        sim.summary.t_final,
        sim.summary.steps,
        sim.summary.conservation_drift,
        out.display()
    );
    Ok(sim.summary.exit_code())
}

/// Bounds report for the config's parameters and initial mass.
pub fn bounds_for(cfg: &ExperimentConfig, p: Option<f64>) -> Result<BoundsReport> {
    let grid = cfg.domain.grid()?;
    let (_, mass) = build_initial_data(&cfg.initial, &cfg.domain)?;
    let p = p.or(cfg.bounds.p).unwrap_or_else(|| bounds::default_p(cfg.params.dim));
    if !(p > 1.0) {
        bail!("energy exponent p = {p} must be > 1");
    }
    Ok(bounds::bounds_report(&cfg.params, &grid, mass, p, cfg.bounds.supplied())?)
}

/// `sim bounds <cfg> [--p X]`: prints the report as JSON.
pub fn cmd_bounds(path: &Path, p: Option<f64>) -> Result<u8> {
    let cfg = ExperimentConfig::load(path)?;
    let report = bounds_for(&cfg, p)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub mass: f64,
    #[serde(flatten)]
    pub regime: Regime,
    pub theorem_applies: bool,
    pub predicts_bounded: Option<bool>,
    pub critical_mass: Option<f64>,
}

pub fn classify(cfg: &ExperimentConfig) -> Result<Classification> {
    let (_, mass) = build_initial_data(&cfg.initial, &cfg.domain)?;
    let regime = classify_regime(&cfg.params, mass)?;
    let p = &cfg.params;
    Ok(Classification {
        mass,
        regime,
        theorem_applies: regime.theorem_applies(),
        predicts_bounded: regime.predicts_bounded(),
        critical_mass: bounds::critical_mass(p.chi, p.alpha, p.xi, p.gamma),
    })
}

/// `sim classify <cfg>`
pub fn cmd_classify(path: &Path) -> Result<u8> {
    let cfg = ExperimentConfig::load(path)?;
    println!("{}", serde_json::to_string_pretty(&classify(&cfg)?)?);
    Ok(EXIT_OK)
}

/// One row of `regime_map.csv`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub prediction: String,
    pub predicted_bounded: Option<bool>,
    /// `None` when the run failed.
    pub observed_bounded: Option<bool>,
    pub status: String,
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn agreement(&self) -> Option<bool> {
        Some(self.predicted_bounded? == self.observed_bounded?)
    }
}

fn outcome_name(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "bounded",
        Some(false) => "blowup",
        None => "failed",
    }
}

fn run_point(cfg: &ExperimentConfig, axis: &str, value: f64, dir: &Path) -> SweepPoint {
    let attempt = || -> Result<SweepPoint> {
        let point = cfg.with_axis(axis, value)?;
        point.validate()?;
        let c = classify(&point)?;
        fs::create_dir_all(dir)?;
        let sim = simulate(&point, Some(dir))?;
        Ok(SweepPoint {
            value,
            prediction: c.regime.name().to_string(),
            predicted_bounded: c.predicts_bounded,
            observed_bounded: Some(sim.report.state.status != Status::BlowupSuspected),
            status: sim.summary.status.to_string(),
            error: None,
        })
    };
    match attempt() {
        Ok(point) => point,
        Err(e) => {
            let prediction = cfg
                .with_axis(axis, value)
                .ok()
                .and_then(|p| classify(&p).ok())
                .map_or_else(|| "invalid".to_string(), |c| c.regime.name().to_string());
            SweepPoint {
                value,
                prediction,
                predicted_bounded: None,
                observed_bounded: None,
                status: "failed".into(),
                error: Some(format!("{e:#}")),
            }
        }
    }
}

pub fn write_regime_map(axis: &str, points: &[SweepPoint], out: &mut impl Write) -> Result<()> {
    writeln!(out, "{axis},classifier_prediction,observed_outcome,agreement,predicted_outcome,final_status")?;
    for p in points {
        let agreement = p.agreement().map_or("na".to_string(), |a| a.to_string());
        writeln!(
            out,
            "{:.16e},{},{},{},{},{}",
            p.value,
            p.prediction,
            outcome_name(p.observed_bounded),
            agreement,
            p.predicted_bounded.map_or("none", |b| if b { "bounded" } else { "blowup" }),
            p.status
        )?;
    }
    Ok(())
}

/// Runs every sweep point (in parallel, bounded by the worker count) and
/// writes `regime_map.csv` and `regime_map.svg`. Failed points are recorded,
/// not fatal.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let Some(spec) = &cfg.sweep else {
        bail!("config has no sweep block");
    };
    if spec.values.is_empty() {
        bail!("sweep.values is empty");
    }
    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.worker_count()?).build()?;
    let dirs: Vec<PathBuf> = (0..spec.values.len()).map(|k| out.join(format!("point_{k:03}"))).collect();
    let points: Vec<SweepPoint> = pool.install(|| {
        spec.values
            .par_iter()
            .zip(dirs.par_iter())
            .map(|(&value, dir)| run_point(cfg, &spec.axis, value, dir))
            .collect()
    });
    let mut csv = Vec::new();
    write_regime_map(&spec.axis, &points, &mut csv)?;
    write_file(&out.join("regime_map.csv"), &csv)?;
    let markers: Vec<RegimePoint> = points
        .iter()
        .map(|p| RegimePoint { value: p.value, predicted: p.predicted_bounded, observed: p.observed_bounded })
        .collect();
    write_file(&out.join("regime_map.svg"), svg::regime_scatter(&spec.axis, &markers).as_bytes())?;
    Ok(points)
}

/// `sim sweep <cfg>`
pub fn cmd_sweep(path: &Path, overrides: &Overrides) -> Result<u8> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(overrides);
    let points = sweep(&cfg)?;
    for p in &points {
        if let Some(e) = &p.error {
            eprintln!("point {} failed: {e}", p.value);
        }
    }
    let disagree = points.iter().filter(|p| p.agreement() == Some(false)).count();
    eprintln!("{} points, {} disagreements; see {}", points.len(), disagree, cfg.output.dir.join("regime_map.csv").display());
    Ok(EXIT_OK)
}
