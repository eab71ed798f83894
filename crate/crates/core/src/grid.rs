//! Cell-centred finite-volume calculus on a rectangle with square cells.
//!
//! Values are stored row-major with `x` varying fastest: cell `(i, j)` lives at
//! index `j * nx + i` and has centre `((i + 1/2) h, (j + 1/2) h)`.
//!
//! Zero-flux boundaries are realised by reflected ghost cells, so every
//! boundary face carries an exactly zero difference. All reductions are
//! serial: each row is summed left to right, then the row sums are added
//! bottom to top. Results are therefore bitwise reproducible.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("field contains non-finite values")]
    NonFiniteField,
    #[error("negative value {value} at cell ({i}, {j}) cannot be raised to fractional power {p}")]
    NegativeFieldWithFractionalPower { i: usize, j: usize, value: f64, p: f64 },
    #[error("exponent p = {0} must be >= 1")]
    InvalidExponent(f64),
    #[error("cells must be square: h_x = {hx}, h_y = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("field has {got} values, grid needs {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("snapshot parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e.to_string())
    }
}

/// Uniform grid geometry. Cheap to copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
}

impl Grid {
    /// Grid on `[0, lx] x [0, ly]` with `nx x ny` cells. The cell sizes
    /// `lx / nx` and `ly / ny` must agree to 1e-12 relative.
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 {
            return Err(GridError::InvalidGeometry("cell counts must be positive".into()));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(GridError::InvalidGeometry("lengths must be positive and finite".into()));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(GridError::NonSquareCells { hx, hy });
        }
        Ok(Self { nx, ny, h: hx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell width (identical on both axes).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lx(&self) -> f64 {
        self.h * self.nx as f64
    }

    pub fn ly(&self) -> f64 {
        self.h * self.ny as f64
    }

    /// |Ω|
    pub fn volume(&self) -> f64 {
        self.lx() * self.ly()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// Eigenvalue magnitude of the 3-point Neumann second difference for
    /// cosine mode `k` on an axis with `n` cells:
    /// `(2 / h^2) (1 - cos(k pi / n)) = (4 / h^2) sin^2(k pi / 2n)`.
    pub fn eigenvalue_1d(&self, k: usize, n: usize) -> f64 {
        let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
        4.0 * s * s / (self.h * self.h)
    }
}

/// A cell-averaged scalar field on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::SizeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `a * self + b * other`
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the largest value (first one on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        (best % self.grid.nx, best / self.grid.nx)
    }

    /// Serial row-by-row sum.
    pub(crate) fn sum(&self) -> f64 {
        self.values.chunks_exact(self.grid.nx).map(|row| row.iter().sum::<f64>()).sum()
    }

    /// Writes the snapshot format `x,y,value` (header included, `x` fastest,
    /// 17 significant digits).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), GridError> {
        let mut buf = String::with_capacity(self.values.len() * 72 + 16);
        buf.push_str("x,y,value\n");
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let (x, y) = self.grid.center(i, j);
                let _ = writeln!(buf, "{:.16e},{:.16e},{:.16e}", x, y, self.get(i, j));
            }
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), GridError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a snapshot written by [`Field::write_csv`]. Rows may come in any
    /// order; every cell must be assigned exactly once.
    pub fn read_csv<R: BufRead>(grid: Grid, input: R) -> Result<Self, GridError> {
        let mut values = vec![f64::NAN; grid.len()];
        let mut seen = vec![false; grid.len()];
        let parse = |s: &str, line: usize| {
            s.trim().parse::<f64>().map_err(|e| GridError::Parse { line, msg: format!("{s:?}: {e}") })
        };
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if n == 0 {
                if line.trim() != "x,y,value" {
                    return Err(GridError::Parse { line: 1, msg: "expected header x,y,value".into() });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(GridError::Parse { line: lineno, msg: "expected 3 columns".into() });
            }
            let (x, y, v) = (parse(cols[0], lineno)?, parse(cols[1], lineno)?, parse(cols[2], lineno)?);
            let i = (x / grid.h).floor();
            let j = (y / grid.h).floor();
            if !(i >= 0.0 && j >= 0.0 && (i as usize) < grid.nx && (j as usize) < grid.ny) {
                return Err(GridError::Parse { line: lineno, msg: format!("point ({x}, {y}) outside domain") });
            }
            let k = grid.idx(i as usize, j as usize);
            if seen[k] {
                return Err(GridError::Parse { line: lineno, msg: "cell assigned twice".into() });
            }
            seen[k] = true;
            values[k] = v;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(GridError::Parse {
                line: 0,
                msg: format!("cell ({}, {}) missing", k % grid.nx, k / grid.nx),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn load_csv(grid: Grid, path: impl AsRef<Path>) -> Result<Self, GridError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(grid, std::io::BufReader::new(file))
    }
}

fn ensure_finite(f: &Field) -> Result<(), GridError> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(GridError::NonFiniteField)
    }
}

/// Midpoint quadrature `h^2 * sum f_ij`.
pub fn integrate(f: &Field) -> Result<f64, GridError> {
    ensure_finite(f)?;
    Ok(f.grid.h * f.grid.h * f.sum())
}

/// `∫ |f|^p`, without the `1/p` root. Negative entries are only allowed
/// for integer `p`.
pub fn lp_norm_p(f: &Field, p: f64) -> Result<f64, GridError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(GridError::InvalidExponent(p));
    }
    ensure_finite(f)?;
    let integer = p.fract() == 0.0;
    let mut total = 0.0;
    for (j, row) in f.values.chunks_exact(f.grid.nx).enumerate() {
        let mut acc = 0.0;
        for (i, &v) in row.iter().enumerate() {
            if v < 0.0 && !integer {
                return Err(GridError::NegativeFieldWithFractionalPower { i, j, value: v, p });
            }
            acc += if p == 1.0 { v.abs() } else if p == 2.0 { v * v } else { v.abs().powf(p) };
        }
        total += acc;
    }
    Ok(f.grid.h * f.grid.h * total)
}

/// Discrete Dirichlet energy `∫ |∇f|^2`: the sum over interior faces of
/// `((f_R - f_L) / h)^2 * h^2`. Boundary faces contribute nothing.
pub fn grad_energy(f: &Field) -> Result<f64, GridError> {
    ensure_finite(f)?;
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let v = &f.values;
    let mut total = 0.0;
    for j in 0..ny {
        let row = &v[j * nx..(j + 1) * nx];
        let mut acc = 0.0;
        for i in 0..nx.saturating_sub(1) {
            let d = row[i + 1] - row[i];
            acc += d * d;
        }
        if j + 1 < ny {
            let up = &v[(j + 1) * nx..(j + 2) * nx];
            for i in 0..nx {
                let d = up[i] - row[i];
                acc += d * d;
            }
        }
        total += acc;
    }
    Ok(total)
}

/// Five-point Laplacian with reflected ghost cells (homogeneous Neumann).
pub fn neumann_laplacian_apply(f: &Field) -> Result<Field, GridError> {
    ensure_finite(f)?;
    let mut out = Field::zeros(f.grid);
    laplacian_into(f, &mut out.values);
    Ok(out)
}

pub(crate) fn laplacian_into(f: &Field, out: &mut [f64]) {
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let inv_h2 = 1.0 / (f.grid.h * f.grid.h);
    let v = &f.values;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = v[k];
            let mut s = 0.0;
            if i > 0 {
                s += v[k - 1] - c;
            }
            if i + 1 < nx {
                s += v[k + 1] - c;
            }
            if j > 0 {
                s += v[k - nx] - c;
            }
            if j + 1 < ny {
                s += v[k + nx] - c;
            }
            out[k] = s * inv_h2;
        }
    }
}
