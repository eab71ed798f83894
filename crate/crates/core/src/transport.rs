//! Conservative finite-volume transport for the cell density:
//! `u_t = ∇·(∇u − u ∇φ)` with drift potential `φ = χv − ξw`.
//!
//! Diffusion uses centred two-point face differences, drift uses first-order
//! upwinding by the sign of the face velocity `(φ_R − φ_L)/h` (cells move up
//! the gradient of φ). Boundary faces carry exactly zero flux, so the update
//! telescopes and the discrete mass is conserved up to rounding. First-order
//! upwinding costs accuracy near steep fronts but keeps the scheme positive
//! under the time-step restriction of [`stable_dt`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsConfig, DiagnosticsError, DiagnosticsRecord};
use crate::elliptic::{solve_signals_with, EllipticError, HelmholtzSolver};
use crate::grid::{self, Field, GridError};
use crate::model::{validate_dynamics, ModelError, ModelParams};

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("state became non-finite at step {0}")]
    NonFiniteState(u64),
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Forward Euler for diffusion and drift.
    #[default]
    ExplicitUpwind,
    /// Explicit upwind drift followed by a backward-Euler diffusion solve.
    ImexDiffusion,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit-upwind" => Ok(Scheme::ExplicitUpwind),
            "imex-diffusion" => Ok(Scheme::ImexDiffusion),
            other => Err(format!("unknown scheme `{other}` (expected explicit-upwind or imex-diffusion)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepperConfig {
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub scheme: Scheme,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { dt_max: 1e-2, cfl_safety: 0.4, dt_min: 1e-12, scheme: Scheme::ExplicitUpwind }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(StepError::InvalidConfig(format!("cfl_safety {} not in (0, 1]", self.cfl_safety)));
        }
        if !(self.dt_min > 0.0 && self.dt_max.is_finite() && self.dt_min < self.dt_max) {
            return Err(StepError::InvalidConfig(format!(
                "need 0 < dt_min < dt_max, got dt_min {} dt_max {}",
                self.dt_min, self.dt_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Running,
    SteadyDetected,
    BlowupSuspected,
    Completed,
}

/// Snapshot of the coupled system. `v` and `w` always belong to `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub u: Field,
    pub v: Field,
    pub w: Field,
    pub t: f64,
    pub step: u64,
    pub status: Status,
}

/// φ = χv − ξw
pub fn drift_potential(state: &SimState, p: &ModelParams) -> Field {
    let (chi, xi) = (p.chi, p.xi);
    let values = state.v.values().iter().zip(state.w.values()).map(|(v, w)| chi * v - xi * w).collect();
    Field::from_values(*state.u.grid(), values).expect("v and w share the grid of u")
}

/// Face fluxes `F` with `u_t = div F`. `x[j * (nx + 1) + i]` is the face on the
/// left of cell `(i, j)`; `y[j * nx + i]` the face below it. Boundary entries
/// are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFluxes {
    nx: usize,
    ny: usize,
    h: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceFluxes {
    /// `(F_east − F_west + F_north − F_south) / h` per cell.
    pub fn divergence(&self) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let inv_h = 1.0 / self.h;
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let fx = self.x[j * (nx + 1) + i + 1] - self.x[j * (nx + 1) + i];
                let fy = self.y[(j + 1) * nx + i] - self.y[j * nx + i];
                out[j * nx + i] = (fx + fy) * inv_h;
            }
        }
        out
    }
}

/// Flux through one face from left/lower cell `l` to right/upper cell `r`,
/// in the `u_t = div F` sign convention.
#[inline]
fn face_flux(ul: f64, ur: f64, phil: f64, phir: f64, inv_h: f64, diffusion: bool) -> f64 {
    let velocity = (phir - phil) * inv_h;
    let upwind = if velocity > 0.0 { ul } else { ur };
    let diff = if diffusion { (ur - ul) * inv_h } else { 0.0 };
    diff - upwind * velocity
}

fn fluxes(u: &Field, phi: &Field, diffusion: bool) -> FaceFluxes {
    let g = *u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inv_h = 1.0 / g.h();
    let (uv, pv) = (u.values(), phi.values());
    let mut x = vec![0.0; (nx + 1) * ny];
    let mut y = vec![0.0; nx * (ny + 1)];
    for j in 0..ny {
        for i in 1..nx {
            let (l, r) = (j * nx + i - 1, j * nx + i);
            x[j * (nx + 1) + i] = face_flux(uv[l], uv[r], pv[l], pv[r], inv_h, diffusion);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let (l, r) = ((j - 1) * nx + i, j * nx + i);
            y[j * nx + i] = face_flux(uv[l], uv[r], pv[l], pv[r], inv_h, diffusion);
        }
    }
    FaceFluxes { nx, ny, h: g.h(), x, y }
}

/// Diffusive plus upwinded drift fluxes.
pub fn face_fluxes(u: &Field, phi: &Field) -> FaceFluxes {
    fluxes(u, phi, true)
}

/// Drift-only fluxes (the explicit half of the IMEX scheme).
pub fn drift_fluxes(u: &Field, phi: &Field) -> FaceFluxes {
    fluxes(u, phi, false)
}

/// Largest total outflow speed of any cell: for each cell the sum of
/// `|φ_R − φ_L| / h` over faces whose drift points out of the cell.
pub fn max_outflow_speed(phi: &Field) -> f64 {
    let g = *phi.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inv_h = 1.0 / g.h();
    let p = phi.values();
    let mut out = vec![0.0f64; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if i + 1 < nx {
                let a = (p[k + 1] - p[k]) * inv_h;
                if a > 0.0 {
                    out[k] += a;
                } else {
                    out[k + 1] -= a;
                }
            }
            if j + 1 < ny {
                let a = (p[k + nx] - p[k]) * inv_h;
                if a > 0.0 {
                    out[k] += a;
                } else {
                    out[k + nx] -= a;
                }
            }
        }
    }
    out.into_iter().fold(0.0, f64::max)
}

/// Time step chosen by [`stable_dt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtChoice {
    pub dt: f64,
    /// The CFL bound fell below `dt_min` and was clamped up to it.
    pub clamped_at_min: bool,
}

/// `dt = safety * min(h^2 / (2 dim), h / speed)` clamped to `[dt_min, dt_max]`.
/// The diffusive bound is dropped for the IMEX scheme. With `speed` the
/// per-cell total outflow speed, explicit-upwind steps with `safety <= 1/2`
/// keep `u` nonnegative.
pub fn stable_dt(cfg: &StepperConfig, h: f64, dim: usize, speed: f64) -> DtChoice {
    let diffusive = match cfg.scheme {
        Scheme::ExplicitUpwind => h * h / (2.0 * dim as f64),
        Scheme::ImexDiffusion => f64::INFINITY,
    };
    let advective = if speed > 0.0 { h / speed } else { f64::INFINITY };
    let raw = cfg.cfl_safety * diffusive.min(advective);
    if raw < cfg.dt_min {
        DtChoice { dt: cfg.dt_min, clamped_at_min: true }
    } else {
        DtChoice { dt: raw.min(cfg.dt_max), clamped_at_min: false }
    }
}

/// Binds model parameters, stepper configuration and a cached elliptic solver.
#[derive(Clone, Debug)]
pub struct Stepper {
    params: ModelParams,
    cfg: StepperConfig,
    solver: HelmholtzSolver,
}

/// One accepted step plus bookkeeping the run loop needs.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: SimState,
    pub dt: DtChoice,
    /// `max |u' − u|`
    pub max_change: f64,
}

impl Stepper {
    pub fn new(params: ModelParams, cfg: StepperConfig, grid: grid::Grid) -> Result<Self, StepError> {
        validate_dynamics(&params)?;
        cfg.validate()?;
        Ok(Self { params, cfg, solver: HelmholtzSolver::new(grid) })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn solver(&self) -> &HelmholtzSolver {
        &self.solver
    }

    /// State at `t = 0` with signals solved for `u0`.
    pub fn initial_state(&self, u0: Field) -> Result<SimState, StepError> {
        let s = solve_signals_with(&self.solver, &u0, &self.params)?;
        Ok(SimState { u: u0, v: s.v, w: s.w, t: 0.0, step: 0, status: Status::Running })
    }

    pub fn choose_dt(&self, state: &SimState) -> DtChoice {
        let phi = drift_potential(state, &self.params);
        stable_dt(&self.cfg, state.u.grid().h(), 2, max_outflow_speed(&phi))
    }

    /// Advances by the CFL step, shortened to at most `dt_cap`.
    pub fn step_capped(&self, state: &SimState, dt_cap: f64) -> Result<StepOutcome, StepError> {
        let phi = drift_potential(state, &self.params);
        let mut choice = stable_dt(&self.cfg, state.u.grid().h(), 2, max_outflow_speed(&phi));
        if dt_cap < choice.dt {
            choice.dt = dt_cap;
        }
        let dt = choice.dt;
        let grid = *state.u.grid();
        let u = state.u.values();
        let next = match self.cfg.scheme {
            Scheme::ExplicitUpwind => {
                let div = face_fluxes(&state.u, &phi).divergence();
                u.iter().zip(&div).map(|(a, d)| a + dt * d).collect::<Vec<_>>()
            }
            Scheme::ImexDiffusion => {
                let div = drift_fluxes(&state.u, &phi).divergence();
                let inv_dt = 1.0 / dt;
                let rhs: Vec<f64> = u.iter().zip(&div).map(|(a, d)| (a + dt * d) * inv_dt).collect();
                self.solver.solve(&Field::from_values(grid, rhs)?, inv_dt)?.into_values()
            }
        };
        let step = state.step + 1;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(StepError::NonFiniteState(step));
        }
        let max_change = next.iter().zip(u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let u_next = Field::from_values(grid, next)?;
        let s = solve_signals_with(&self.solver, &u_next, &self.params)?;
        let state = SimState { u: u_next, v: s.v, w: s.w, t: state.t + dt, step, status: Status::Running };
        Ok(StepOutcome { state, dt: choice, max_change })
    }

    pub fn step(&self, state: &SimState) -> Result<SimState, StepError> {
        Ok(self.step_capped(state, f64::INFINITY)?.state)
    }
}

/// One step with a freshly built solver. Use [`Stepper`] for repeated steps.
pub fn step(state: &SimState, p: &ModelParams, cfg: &StepperConfig) -> Result<SimState, StepError> {
    Stepper::new(*p, *cfg, *state.u.grid())?.step(state)
}

/// Stopping rules for [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub max_steps: Option<u64>,
    /// Absolute threshold on `max u`; `None` means `1e6 * m / |Ω|`.
    pub blowup_threshold: Option<f64>,
    /// Threshold on `max|u' − u| / (dt max u)`; 0 disables steady detection.
    pub steady_tol: f64,
}

impl RunOptions {
    pub fn until(t_end: f64) -> Self {
        Self { t_end, max_steps: None, blowup_threshold: None, steady_tol: 1e-10 }
    }
}

/// Relative factor of the default blow-up threshold over the mean density.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    /// `max u` exceeded the threshold (proxy for `‖u‖_∞ → ∞`).
    ThresholdExceeded,
    /// The CFL step fell below `dt_min`.
    TimeStepCollapse,
    /// The update produced NaN or infinity.
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    pub initial_mass: f64,
    pub blowup_threshold: f64,
    pub blowup_reason: Option<BlowupReason>,
    /// `max_n |∫u_n − m| / m`
    pub max_mass_drift: f64,
    /// `min_n (min u_n / max u_n)`; nonnegative means no negative cell ever.
    pub min_positivity_ratio: f64,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Steps until `t_end`, `max_steps`, a steady state or blow-up suspicion.
/// Records are sampled at the start, every `diag.sample_every` steps and at
/// the end; `on_step` sees every accepted state.
pub fn run(
    stepper: &Stepper,
    initial: SimState,
    opts: &RunOptions,
    diag: &DiagnosticsConfig,
    mut on_step: impl FnMut(&SimState),
) -> Result<RunReport, StepError> {
    let initial_mass = grid::integrate(&initial.u)?;
    let blowup_threshold = opts
        .blowup_threshold
        .unwrap_or(DEFAULT_BLOWUP_FACTOR * initial_mass / initial.u.grid().volume());
    let mut report = RunReport {
        state: initial,
        records: Vec::new(),
        initial_mass,
        blowup_threshold,
        blowup_reason: None,
        max_mass_drift: 0.0,
        min_positivity_ratio: f64::INFINITY,
        min_dt: f64::INFINITY,
        max_dt: 0.0,
    };
    let positivity = |u: &Field| {
        let max = u.max();
        if max > 0.0 {
            u.min() / max
        } else {
            0.0
        }
    };
    report.min_positivity_ratio = positivity(&report.state.u);
    if opts.t_end <= report.state.t || opts.max_steps == Some(0) {
        report.state.status = Status::Completed;
        return Ok(report);
    }
    let sample_every = diag.sample_every.max(1) as u64;
    let mut sampler = diagnostics::Sampler::new(diag);
    sampler.push(&report.state)?;

    let mut status = Status::Running;
    while status == Status::Running {
        let remaining = opts.t_end - report.state.t;
        let outcome = match stepper.step_capped(&report.state, remaining) {
            Ok(o) => o,
            Err(StepError::NonFiniteState(_)) => {
                report.blowup_reason = Some(BlowupReason::NonFinite);
                status = Status::BlowupSuspected;
                break;
            }
            Err(e) => return Err(e),
        };
        let StepOutcome { state, dt, max_change } = outcome;
        report.min_dt = report.min_dt.min(dt.dt);
        report.max_dt = report.max_dt.max(dt.dt);
        let mass = grid::integrate(&state.u)?;
        report.max_mass_drift = report.max_mass_drift.max((mass - initial_mass).abs() / initial_mass);
        report.min_positivity_ratio = report.min_positivity_ratio.min(positivity(&state.u));
        let u_max = state.u.max();

        if diagnostics::detect_blowup(&state, blowup_threshold) {
            report.blowup_reason = Some(BlowupReason::ThresholdExceeded);
            status = Status::BlowupSuspected;
        } else if dt.clamped_at_min {
            report.blowup_reason = Some(BlowupReason::TimeStepCollapse);
            status = Status::BlowupSuspected;
        } else if state.t >= opts.t_end || opts.max_steps.is_some_and(|n| state.step >= n) {
            status = Status::Completed;
        } else if opts.steady_tol > 0.0 && max_change <= opts.steady_tol * dt.dt * u_max {
            status = Status::SteadyDetected;
        }
        report.state = state;
        report.state.status = status;
        on_step(&report.state);
        if status != Status::Running || report.state.step.is_multiple_of(sample_every) {
            sampler.push(&report.state)?;
        }
    }
    report.state.status = status;
    report.records = sampler.finish();
    Ok(report)
}
