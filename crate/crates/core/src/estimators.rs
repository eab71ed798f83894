//! Lower estimates of interpolation constants by maximising the defining
//! ratio over a family of test functions on the grid.
//!
//! Members are defined in physical coordinates (not cell units), so the same
//! family is sampled consistently under mesh refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{self, Field, Grid, GridError};

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("estimators work on 2-D grids; got n = {0}")]
    DimensionMismatch(usize),
    #[error("eta = {0} must lie in (0, 1/2)")]
    EtaOutOfRange(f64),
    #[error("p = {0} must be > 1")]
    InvalidExponent(f64),
    #[error("test family is empty")]
    EmptyFamily,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A test function on `[0, L_x] x [0, L_y]`.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant,
    /// `offset + cos(kπx/L_x) cos(lπy/L_y)`
    Cosine { k: usize, l: usize, offset: f64 },
    /// Gaussian bump, width as a fraction of `min(L_x, L_y)`.
    Bump { center: [f64; 2], width: f64 },
    /// Seeded random combination of low cosine modes, optionally shifted to be positive.
    Smooth { seed: u64, modes: usize, positive: bool },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant => "constant".into(),
            TestFunction::Cosine { k, l, offset } => format!("cosine(k={k},l={l},offset={offset})"),
            TestFunction::Bump { center, width } => {
                format!("bump(center=[{},{}],width={width})", center[0], center[1])
            }
            TestFunction::Smooth { seed, modes, positive } => {
                format!("smooth(seed={seed},modes={modes},positive={positive})")
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Field {
        use std::f64::consts::PI;
        let (lx, ly) = (grid.lx(), grid.ly());
        match self {
            TestFunction::Constant => Field::constant(*grid, 1.0),
            TestFunction::Cosine { k, l, offset } => {
                let (kx, ky) = (*k as f64 * PI / lx, *l as f64 * PI / ly);
                Field::from_fn(*grid, |x, y| offset + (kx * x).cos() * (ky * y).cos())
            }
            TestFunction::Bump { center, width } => {
                let w = width * lx.min(ly);
                let (cx, cy) = (center[0] * lx, center[1] * ly);
                Field::from_fn(*grid, |x, y| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp())
            }
            TestFunction::Smooth { seed, modes, positive } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut terms = Vec::new();
                for k in 0..=*modes {
                    for l in 0..=*modes {
                        if k + l > 0 {
                            let amp: f64 = rng.gen_range(-1.0..1.0) / (1.0 + (k * k + l * l) as f64);
                            terms.push((k as f64 * PI / lx, l as f64 * PI / ly, amp));
                        }
                    }
                }
                let f = Field::from_fn(*grid, |x, y| terms.iter().map(|(a, b, c)| c * (a * x).cos() * (b * y).cos()).sum());
                if *positive {
                    let shift = 1e-3 - f.min();
                    f.map(|v| v + shift.max(0.0))
                } else {
                    f
                }
            }
        }
    }
}

/// Constants, cosine modes, bumps at corners/edges/centre and random smooth fields.
pub fn default_family() -> Vec<TestFunction> {
    let mut family = vec![TestFunction::Constant];
    for k in 0..=4 {
        for l in 0..=4 {
            if k + l == 0 {
                continue;
            }
            family.push(TestFunction::Cosine { k, l, offset: 0.0 });
            family.push(TestFunction::Cosine { k, l, offset: 1.0 });
        }
    }
    let anchors = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5], [0.25, 0.75]];
    for center in anchors {
        for width in [0.1, 0.15, 0.2, 0.3, 0.5] {
            family.push(TestFunction::Bump { center, width });
        }
    }
    for seed in 0..8 {
        family.push(TestFunction::Smooth { seed, modes: 3, positive: seed % 2 == 0 });
    }
    family
}

/// Best ratio and the member attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub witness: String,
}

/// `(∫|f|^r)^{1/r}`, a quasi-norm for r < 1.
fn lr_norm(f: &Field, r: f64) -> f64 {
    let h2 = f.grid().h().powi(2);
    let s: f64 = f.values().chunks_exact(f.grid().nx()).map(|row| row.iter().map(|v| v.abs().powf(r)).sum::<f64>()).sum();
    (h2 * s).powf(1.0 / r)
}

/// Gagliardo–Nirenberg ratio
/// `‖f‖₂ / (‖∇f‖₂^θ ‖f‖_{2/p}^{1−θ} + ‖f‖_{2/p})`.
pub fn gn_ratio(f: &Field, p: f64, theta: f64) -> Result<f64, EstimatorError> {
    let l2 = grid::lp_norm_p(&f.map(f64::abs), 2.0)?.sqrt();
    let grad = grid::grad_energy(f)?.sqrt();
    let low = lr_norm(f, 2.0 / p);
    let denom = grad.powf(theta) * low.powf(1.0 - theta) + low;
    Ok(if denom > 0.0 { l2 / denom } else { 0.0 })
}

/// Ehrling ratio: the least `c` with `‖V‖₂² ≤ η‖V‖²_{W^{1,2}} + c ‖V‖²_{2/(p+1)}`
/// for this `V`, floored at zero.
pub fn ehrling_ratio(f: &Field, eta: f64, p: f64) -> Result<f64, EstimatorError> {
    let l2sq = grid::lp_norm_p(&f.map(f64::abs), 2.0)?;
    let gradsq = grid::grad_energy(f)?;
    let low = lr_norm(f, 2.0 / (p + 1.0));
    let excess = l2sq - eta * (l2sq + gradsq);
    Ok(if low > 0.0 { (excess / (low * low)).max(0.0) } else { 0.0 })
}

fn maximise(
    grid: &Grid,
    family: &[TestFunction],
    ratio: impl Fn(&Field) -> Result<f64, EstimatorError>,
) -> Result<Estimate, EstimatorError> {
    let mut best: Option<Estimate> = None;
    for member in family {
        let r = ratio(&member.sample(grid))?;
        if best.as_ref().is_none_or(|b| r > b.value) {
            best = Some(Estimate { value: r, witness: member.label() });
        }
    }
    best.ok_or(EstimatorError::EmptyFamily)
}

pub fn estimate_cgn_over(grid: &Grid, p: f64, n: usize, family: &[TestFunction]) -> Result<Estimate, EstimatorError> {
    if n != 2 {
        return Err(EstimatorError::DimensionMismatch(n));
    }
    if !(p > 1.0) {
        return Err(EstimatorError::InvalidExponent(p));
    }
    let theta = (0.5 * p - 0.5) / (0.5 * p + 1.0 / n as f64 - 0.5);
    maximise(grid, family, |f| gn_ratio(f, p, theta))
}

/// Lower estimate of `C_GN` over [`default_family`].
pub fn estimate_cgn(grid: &Grid, p: f64, n: usize) -> Result<Estimate, EstimatorError> {
    estimate_cgn_over(grid, p, n, &default_family())
}

pub fn estimate_ehrling_ce_over(grid: &Grid, eta: f64, p: f64, family: &[TestFunction]) -> Result<Estimate, EstimatorError> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(EstimatorError::EtaOutOfRange(eta));
    }
    if !(p > 1.0) {
        return Err(EstimatorError::InvalidExponent(p));
    }
    maximise(grid, family, |f| ehrling_ratio(f, eta, p))
}

/// Lower estimate of `c_E(η)` over [`default_family`].
pub fn estimate_ehrling_ce(grid: &Grid, eta: f64, p: f64) -> Result<Estimate, EstimatorError> {
    estimate_ehrling_ce_over(grid, eta, p, &default_family())
}
