//! Rectilinear sample grids and grid-valued fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::{Field, FieldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("axis `{axis}` needs at least {min} points, got {got}")]
    TooFewPoints { axis: &'static str, min: usize, got: usize },
    #[error("axis `{axis}` has non-positive spacing ({lo} .. {hi})")]
    BadRange { axis: &'static str, lo: f64, hi: f64 },
    #[error("t0 = {t0} does not match the first t node {first}")]
    T0Mismatch { t0: f64, first: f64 },
    #[error("field has {got} values but grid has {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis { lo, hi, n }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    fn validate(&self, name: &'static str, min: usize) -> Result<(), GridError> {
        if self.n < min {
            return Err(GridError::TooFewPoints { axis: name, min, got: self.n });
        }
        if !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(GridError::BadRange { axis: name, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }
}

/// Tensor grid over (x1, x2, t) with at least four points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub x1: Axis,
    pub x2: Axis,
    pub t: Axis,
}

impl Grid3 {
    pub fn new(x1: Axis, x2: Axis, t: Axis) -> Result<Self, GridError> {
        x1.validate("x1", 4)?;
        x2.validate("x2", 4)?;
        t.validate("t", 4)?;
        Ok(Grid3 { x1, x2, t })
    }

    pub fn len(&self) -> usize {
        self.x1.n * self.x2.n * self.t.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index with t fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.x2.n + j) * self.t.n + k
    }

    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.t.n;
        let rest = idx / self.t.n;
        (rest / self.x2.n, rest % self.x2.n, k)
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unflatten(idx);
        [self.x1.node(i), self.x2.node(j), self.t.node(k)]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Values of a scalar field at every node of a [`Grid3`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: Grid3,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::SizeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(GridField { grid, values })
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }
}

/// Evaluate a field at every grid node (in parallel).
pub fn sample(field: &Field, grid: &Grid3) -> Result<GridField, FieldError> {
    let values =
        (0..grid.len()).into_par_iter().map(|idx| field.value(grid.point(idx))).collect::<Result<Vec<_>, _>>()?;
    Ok(GridField { grid: *grid, values })
}

/// F(·,·,t) = ∫_{t0}^{t} f dt along each time line. Composite Simpson when the
/// t axis has an odd node count (the odd-index nodes close with the
/// three-point partial-panel rule), trapezoid otherwise.
pub fn cumulative_time_integral(f: &GridField, t0: f64) -> Result<GridField, GridError> {
    let grid = f.grid;
    let first = grid.t.lo;
    if (t0 - first).abs() > 1e-12 * first.abs().max(1.0) {
        return Err(GridError::T0Mismatch { t0, first });
    }
    let nt = grid.t.n;
    let h = grid.t.spacing();
    let simpson = nt % 2 == 1;
    let mut out = vec![0.0; f.values.len()];
    out.par_chunks_mut(nt).zip(f.values.par_chunks(nt)).for_each(|(dst, src)| {
        dst[0] = 0.0;
        if simpson {
            for k in (2..nt).step_by(2) {
                dst[k] = dst[k - 2] + h / 3.0 * (src[k - 2] + 4.0 * src[k - 1] + src[k]);
            }
            for k in (1..nt).step_by(2) {
                dst[k] = dst[k - 1] + h / 12.0 * (5.0 * src[k - 1] + 8.0 * src[k] - src[k + 1]);
            }
        } else {
            for k in 1..nt {
                dst[k] = dst[k - 1] + 0.5 * h * (src[k - 1] + src[k]);
            }
        }
    });
    Ok(GridField { grid, values: out })
}
