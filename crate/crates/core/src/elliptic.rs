//! Screened Poisson solves `-Δφ + κφ = f` with homogeneous Neumann data.
//!
//! The cell-centred five-point operator with reflected ghosts is diagonalised
//! exactly by the type-II cosine transform along each axis, so the solve is
//! direct: forward DCT-II, divide by `κ + λ_x(k) + λ_y(l)`, inverse (DCT-III).
//! For κ > 0 every symbol is positive and no compatibility condition arises.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};
use thiserror::Error;

use crate::grid::{Field, Grid, GridError};
use crate::model::ModelParams;

/// Relative slack for the discrete maximum principle and for treating
/// rounding-level negative densities as zero.
pub const NONNEG_RTOL: f64 = 1e-13;

#[derive(Debug, Error, PartialEq)]
pub enum EllipticError {
    #[error("zero-order coefficient kappa = {0} must be positive")]
    NonPositiveKappa(f64),
    #[error("source field contains non-finite values")]
    NonFiniteSource,
    #[error("density is negative ({value}) at cell {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("solution violates the maximum principle: min {min}, max {max}")]
    MaximumPrinciple { min: f64, max: f64 },
    #[error("source lives on a different grid than the solver")]
    GridMismatch,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `-Δφ + κφ = source`
#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzProblem {
    pub source: Field,
    pub kappa: f64,
}

/// Cosine-transform solver bound to one grid. Plans and eigenvalues are
/// computed once; `solve` only allocates its output and a work buffer.
#[derive(Clone)]
pub struct HelmholtzSolver {
    grid: Grid,
    dct_x: Arc<dyn TransformType2And3<f64>>,
    dct_y: Arc<dyn TransformType2And3<f64>>,
    lambda_x: Vec<f64>,
    lambda_y: Vec<f64>,
}

impl std::fmt::Debug for HelmholtzSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzSolver").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl HelmholtzSolver {
    pub fn new(grid: Grid) -> Self {
        let mut planner = DctPlanner::new();
        let dct_x = planner.plan_dct2(grid.nx());
        let dct_y = planner.plan_dct2(grid.ny());
        let lambda_x = (0..grid.nx()).map(|k| grid.eigenvalue_1d(k, grid.nx())).collect();
        let lambda_y = (0..grid.ny()).map(|k| grid.eigenvalue_1d(k, grid.ny())).collect();
        Self { grid, dct_x, dct_y, lambda_x, lambda_y }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn solve(&self, source: &Field, kappa: f64) -> Result<Field, EllipticError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(EllipticError::NonPositiveKappa(kappa));
        }
        if *source.grid() != self.grid {
            return Err(EllipticError::GridMismatch);
        }
        if !source.is_finite() {
            return Err(EllipticError::NonFiniteSource);
        }
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut data = source.values().to_vec();
        let mut scratch = vec![0.0; self.dct_x.get_scratch_len().max(self.dct_y.get_scratch_len())];

        for row in data.chunks_exact_mut(nx) {
            self.dct_x.process_dct2_with_scratch(row, &mut scratch);
        }
        let mut cols = transpose(&data, nx, ny);
        for (i, col) in cols.chunks_exact_mut(ny).enumerate() {
            self.dct_y.process_dct2_with_scratch(col, &mut scratch);
            let lx = self.lambda_x[i] + kappa;
            for (c, ly) in col.iter_mut().zip(&self.lambda_y) {
                *c /= lx + ly;
            }
            self.dct_y.process_dct3_with_scratch(col, &mut scratch);
        }
        let mut data = transpose(&cols, ny, nx);
        let scale = 4.0 / (nx as f64 * ny as f64);
        for row in data.chunks_exact_mut(nx) {
            self.dct_x.process_dct3_with_scratch(row, &mut scratch);
            row.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(Field::from_values(self.grid, data)?)
    }
}

/// `rows x cols` row-major -> `cols x rows` row-major.
fn transpose(data: &[f64], cols: usize, rows: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

pub fn solve_helmholtz(prob: &HelmholtzProblem) -> Result<Field, EllipticError> {
    HelmholtzSolver::new(*prob.source.grid()).solve(&prob.source, prob.kappa)
}

/// `(α u^ρ, γ u)`. Values in `[-1e-13 max u, 0)` are rounding residue from the
/// transport step and count as zero in `u^ρ`; anything more negative is an error.
pub fn chemical_sources(u: &Field, p: &ModelParams) -> Result<(Field, Field), EllipticError> {
    if !u.is_finite() {
        return Err(EllipticError::NonFiniteSource);
    }
    let floor = -NONNEG_RTOL * u.max().max(0.0);
    if let Some((index, &value)) = u.values().iter().enumerate().find(|(_, v)| **v < floor) {
        return Err(EllipticError::NegativeDensity { index, value });
    }
    let (alpha, rho) = (p.alpha, p.rho);
    let production = if rho == 1.0 {
        u.map(|x| alpha * x.max(0.0))
    } else if rho == 0.5 {
        u.map(|x| alpha * x.max(0.0).sqrt())
    } else {
        u.map(|x| alpha * x.max(0.0).powf(rho))
    };
    let gamma = p.gamma;
    Ok((production, u.map(|x| gamma * x)))
}

/// Attractant `v` and repellent `w` for the density `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signals {
    pub v: Field,
    pub w: Field,
}

/// Solves both signal equations with a reusable solver.
pub fn solve_signals_with(solver: &HelmholtzSolver, u: &Field, p: &ModelParams) -> Result<Signals, EllipticError> {
    let (fv, fw) = chemical_sources(u, p)?;
    let v = solver.solve(&fv, p.beta)?;
    let w = solver.solve(&fw, p.delta)?;
    for field in [&v, &w] {
        let (min, max) = (field.min(), field.max());
        if min < -NONNEG_RTOL * max.max(0.0) {
            return Err(EllipticError::MaximumPrinciple { min, max });
        }
    }
    Ok(Signals { v, w })
}

pub fn solve_signals(u: &Field, p: &ModelParams) -> Result<Signals, EllipticError> {
    solve_signals_with(&HelmholtzSolver::new(*u.grid()), u, p)
}
