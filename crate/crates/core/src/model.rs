//! Model parameters, domain geometry, initial data and the regime taxonomy.
//!
//! The system simulated is
//!
//! ```text
//! u_t = Δu − χ ∇·(u ∇v) + ξ ∇·(u ∇w)
//!   0 = Δv − βv + α u^ρ
//!   0 = Δw − δw + γ u
//! ```
//!
//! with zero-flux boundary conditions for all three unknowns.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, Field, Grid, GridError};

/// Relative tolerance on `|m (χα − ξγ) − 4π|` for the critical-mass case.
pub const CRITICAL_MASS_RTOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("coefficient `{0}` must be strictly positive")]
    NonPositiveCoefficient(&'static str),
    #[error("production exponent rho = {0} must lie in (0, 1]")]
    RhoOutOfRange(f64),
    #[error("spatial dimension n = {0} must be >= 2")]
    DimensionOutOfRange(usize),
    #[error("mass must be positive and finite, got {0}")]
    NonPositiveMass(f64),
    #[error("initial amplitude must be nonnegative, got {0}")]
    NegativeAmplitude(f64),
    #[error("initial data is identically zero")]
    ZeroField,
    #[error("initial data contains negative or non-finite values")]
    InvalidInitialValues,
    #[error("bump width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("multi-bump initial data needs at least one bump")]
    NoBumps,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Coefficients of the chemotaxis system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub chi: f64,
    pub xi: f64,
    pub rho: f64,
    /// Spatial dimension. Simulation supports 2; bounds arithmetic takes any n >= 2.
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    2
}

impl ModelParams {
    /// All coefficients one, with the given production exponent.
    pub fn unit(rho: f64) -> Self {
        Self { alpha: 1.0, beta: 1.0, gamma: 1.0, delta: 1.0, chi: 1.0, xi: 1.0, rho, dim: 2 }
    }

    /// `χα − ξγ`; positive when attraction dominates.
    pub fn attraction_excess(&self) -> f64 {
        self.chi * self.alpha - self.xi * self.gamma
    }

    pub fn coefficients(&self) -> [(&'static str, f64); 6] {
        [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("chi", self.chi),
            ("xi", self.xi),
        ]
    }
}

pub fn validate_params(p: &ModelParams) -> Result<(), ModelError> {
    for (name, value) in p.coefficients() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ModelError::NonPositiveCoefficient(name));
        }
    }
    if !(p.rho > 0.0 && p.rho <= 1.0) {
        return Err(ModelError::RhoOutOfRange(p.rho));
    }
    if p.dim < 2 {
        return Err(ModelError::DimensionOutOfRange(p.dim));
    }
    Ok(())
}

/// Like [`validate_params`] but lets the sensitivities `χ`, `ξ` be zero, so
/// the stepper can run the pure-diffusion reduction.
pub fn validate_dynamics(p: &ModelParams) -> Result<(), ModelError> {
    let relaxed = ModelParams {
        chi: if p.chi == 0.0 { 1.0 } else { p.chi },
        xi: if p.xi == 0.0 { 1.0 } else { p.xi },
        ..*p
    };
    validate_params(&relaxed)
}

/// Axis-aligned rectangle `[0, L_x] x [0, L_y]` discretised with square cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lengths: [f64; 2],
    pub cells: [usize; 2],
}

impl DomainSpec {
    pub fn unit_square(n: usize) -> Self {
        Self { lengths: [1.0, 1.0], cells: [n, n] }
    }

    pub fn volume(&self) -> f64 {
        self.lengths[0] * self.lengths[1]
    }

    pub fn grid(&self) -> Result<Grid, GridError> {
        Grid::new(self.lengths[0], self.lengths[1], self.cells[0], self.cells[1])
    }
}

/// Where the system sits in the global-existence / blow-up taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime")]
pub enum Regime {
    /// ρ < 1: solutions are global and bounded for any data.
    SublinearGlobal,
    /// ρ = 1 and ξγ > χα.
    RepulsionDominant,
    /// ρ = 1, n = 2, χα > ξγ and m below `4π / (χα − ξγ)`.
    SubcriticalMass { threshold: f64 },
    /// ρ = 1, n = 2, χα > ξγ and m above the threshold.
    SupercriticalMass { threshold: f64 },
    /// m equals the threshold within [`CRITICAL_MASS_RTOL`].
    CriticalMass { threshold: f64 },
    /// ρ = 1 and either n > 2 with χα > ξγ, or χα = ξγ exactly.
    Indeterminate,
}

impl Regime {
    /// Whether bounded global solutions are guaranteed for sublinear production.
    /// False for every ρ = 1 variant.
    pub fn theorem_applies(&self) -> bool {
        matches!(self, Regime::SublinearGlobal)
    }

    /// Expected outcome of a simulation: `Some(true)` for bounded,
    /// `Some(false)` for blow-up, `None` when no prediction is made.
    pub fn predicts_bounded(&self) -> Option<bool> {
        match self {
            Regime::SublinearGlobal | Regime::RepulsionDominant | Regime::SubcriticalMass { .. } => Some(true),
            Regime::SupercriticalMass { .. } => Some(false),
            Regime::CriticalMass { .. } | Regime::Indeterminate => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::SublinearGlobal => "SublinearGlobal",
            Regime::RepulsionDominant => "RepulsionDominant",
            Regime::SubcriticalMass { .. } => "SubcriticalMass",
            Regime::SupercriticalMass { .. } => "SupercriticalMass",
            Regime::CriticalMass { .. } => "CriticalMass",
            Regime::Indeterminate => "Indeterminate",
        }
    }
}

pub fn classify_regime(p: &ModelParams, mass: f64) -> Result<Regime, ModelError> {
    validate_params(p)?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(ModelError::NonPositiveMass(mass));
    }
    if p.rho < 1.0 {
        return Ok(Regime::SublinearGlobal);
    }
    let chi_alpha = p.chi * p.alpha;
    let xi_gamma = p.xi * p.gamma;
    if xi_gamma > chi_alpha {
        return Ok(Regime::RepulsionDominant);
    }
    if xi_gamma == chi_alpha || p.dim > 2 {
        return Ok(Regime::Indeterminate);
    }
    let excess = chi_alpha - xi_gamma;
    let threshold = 4.0 * PI / excess;
    let gap = mass * excess - 4.0 * PI;
    Ok(if gap.abs() <= CRITICAL_MASS_RTOL * 4.0 * PI {
        Regime::CriticalMass { threshold }
    } else if gap < 0.0 {
        Regime::SubcriticalMass { threshold }
    } else {
        Regime::SupercriticalMass { threshold }
    })
}

/// A single Gaussian bump `A exp(-|x - c|^2 / (2 w^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialShape {
    Uniform { value: f64 },
    GaussianBump(Bump),
    MultiBump { bumps: Vec<Bump> },
    FromFile { path: PathBuf },
}

/// Initial cell density. When `mass` is set the shape is rescaled so that
/// its discrete integral equals it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(flatten)]
    pub shape: InitialShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

impl InitialData {
    pub fn uniform(value: f64) -> Self {
        Self { shape: InitialShape::Uniform { value }, mass: None }
    }

    pub fn gaussian(center: [f64; 2], width: f64, amplitude: f64) -> Self {
        Self { shape: InitialShape::GaussianBump(Bump { center, width, amplitude }), mass: None }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = Some(mass);
        self
    }
}

/// Mean of `exp(-(x - c)^2 / (2 w^2))` over `[a, b]`.
fn gaussian_cell_mean(a: f64, b: f64, c: f64, w: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 * w;
    let (za, zb) = ((a - c) / s, (b - c) / s);
    // erf differences lose everything in the tails; use erfc on the far side.
    let diff = if za >= 0.0 {
        libm::erfc(za) - libm::erfc(zb)
    } else if zb <= 0.0 {
        libm::erfc(-zb) - libm::erfc(-za)
    } else {
        libm::erf(zb) - libm::erf(za)
    };
    0.5 * (PI.sqrt()) * s * diff / (b - a)
}

fn add_bump(grid: &Grid, bump: &Bump, values: &mut [f64]) -> Result<(), ModelError> {
    if !(bump.amplitude >= 0.0) {
        return Err(ModelError::NegativeAmplitude(bump.amplitude));
    }
    if !(bump.width > 0.0) {
        return Err(ModelError::NonPositiveWidth(bump.width));
    }
    let h = grid.h();
    let gx: Vec<f64> = (0..grid.nx())
        .map(|i| gaussian_cell_mean(i as f64 * h, (i + 1) as f64 * h, bump.center[0], bump.width))
        .collect();
    let gy: Vec<f64> = (0..grid.ny())
        .map(|j| gaussian_cell_mean(j as f64 * h, (j + 1) as f64 * h, bump.center[1], bump.width))
        .collect();
    for (j, row) in values.chunks_exact_mut(grid.nx()).enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v += bump.amplitude * gx[i] * gy[j];
        }
    }
    Ok(())
}

/// Builds `u0` as exact cell averages of the requested shape and returns it
/// together with its discrete mass.
pub fn build_initial_data(spec: &InitialData, dom: &DomainSpec) -> Result<(Field, f64), ModelError> {
    let grid = dom.grid()?;
    let mut field = match &spec.shape {
        InitialShape::Uniform { value } => {
            if !(*value >= 0.0) {
                return Err(ModelError::NegativeAmplitude(*value));
            }
            Field::constant(grid, *value)
        }
        InitialShape::GaussianBump(bump) => {
            let mut values = vec![0.0; grid.len()];
            add_bump(&grid, bump, &mut values)?;
            Field::from_values(grid, values)?
        }
        InitialShape::MultiBump { bumps } => {
            if bumps.is_empty() {
                return Err(ModelError::NoBumps);
            }
            let mut values = vec![0.0; grid.len()];
            for bump in bumps {
                add_bump(&grid, bump, &mut values)?;
            }
            Field::from_values(grid, values)?
        }
        InitialShape::FromFile { path } => Field::load_csv(grid, path)?,
    };
    if field.values().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(ModelError::InvalidInitialValues);
    }
    let mut mass = grid::integrate(&field)?;
    if !(mass > 0.0) {
        return Err(ModelError::ZeroField);
    }
    if let Some(target) = spec.mass {
        if !(target > 0.0 && target.is_finite()) {
            return Err(ModelError::NonPositiveMass(target));
        }
        let scale = target / mass;
        field.values_mut().iter_mut().for_each(|v| *v *= scale);
        mass = grid::integrate(&field)?;
    }
    Ok((field, mass))
}
