//! Dirichlet problem Δψ = rhs on a rectangle with the 5-point stencil.
//!
//! Grids with at most 256² nodes use a banded Cholesky factorisation of the
//! negated discrete Laplacian; larger grids use conjugate gradients.

use rayon::prelude::*;
use thiserror::Error;

use super::field::{Field, Interp2};
use super::grid::Axis;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error("grid needs at least 3 nodes per axis and a positive extent")]
    BadGrid,
    #[error("non-finite right-hand side or boundary value at ({x1}, {x2})")]
    NonFinite { x1: f64, x2: f64 },
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("banded factorisation hit a non-positive pivot")]
    Factorisation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonOptions {
    /// Node count above which CG replaces the direct solve.
    pub direct_limit: usize,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        PoissonOptions { direct_limit: 256 * 256, cg_tolerance: 1e-13, cg_max_iterations: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoissonMethod {
    BandedCholesky,
    ConjugateGradient { iterations: usize },
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub x1: Axis,
    pub x2: Axis,
    /// Row-major, x2 fastest.
    pub values: Vec<f64>,
    pub method: PoissonMethod,
    /// max |Δ_h ψ − rhs| over interior nodes.
    pub residual: f64,
    /// `residual` divided by the stencil scale max(|rhs|, |ψ|·(2/hx² + 2/hy²)).
    pub relative_residual: f64,
}

impl PoissonSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.x2.n + j]
    }

    /// Smooth interpolating field with jets in (x1, x2).
    pub fn field(&self) -> Field {
        Field::sampled(Interp2::new(self.x1.nodes(), self.x2.nodes(), self.values.clone()))
    }
}

struct Stencil {
    nx: usize,
    ny: usize,
    cx: f64,
    cy: f64,
}

impl Stencil {
    fn interior(&self) -> (usize, usize) {
        (self.nx - 2, self.ny - 2)
    }

    /// y = (−Δ_h) x on interior unknowns (zero boundary).
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (mx, my) = self.interior();
        let diag = 2.0 * (self.cx + self.cy);
        y.par_chunks_mut(my).enumerate().for_each(|(i, row)| {
            for (j, out) in row.iter_mut().enumerate() {
                let k = i * my + j;
                let mut v = diag * x[k];
                if i > 0 {
                    v -= self.cx * x[k - my];
                }
                if i + 1 < mx {
                    v -= self.cx * x[k + my];
                }
                if j > 0 {
                    v -= self.cy * x[k - 1];
                }
                if j + 1 < my {
                    v -= self.cy * x[k + 1];
                }
                *out = v;
            }
        });
    }
}

/// Solve Δψ = rhs on the rectangle spanned by `x1` × `x2` with ψ = boundary
/// on the edges.
pub fn solve_poisson_2d(
    rhs: &(dyn Fn(f64, f64) -> f64 + Sync),
    x1: Axis,
    x2: Axis,
    boundary: &(dyn Fn(f64, f64) -> f64 + Sync),
    options: PoissonOptions,
) -> Result<PoissonSolution, PoissonError> {
    if x1.n < 3 || x2.n < 3 || !(x1.hi > x1.lo) || !(x2.hi > x2.lo) {
        return Err(PoissonError::BadGrid);
    }
    let (nx, ny) = (x1.n, x2.n);
    let (hx, hy) = (x1.spacing(), x2.spacing());
    let st = Stencil { nx, ny, cx: 1.0 / (hx * hx), cy: 1.0 / (hy * hy) };
    let (mx, my) = st.interior();

    let mut psi = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                let (a, b) = (x1.node(i), x2.node(j));
                let v = boundary(a, b);
                if !v.is_finite() {
                    return Err(PoissonError::NonFinite { x1: a, x2: b });
                }
                psi[i * ny + j] = v;
            }
        }
    }

    // b = −rhs + boundary couplings, for the SPD system (−Δ_h) u = b.
    let mut b = vec![0.0; mx * my];
    let mut rhs_max: f64 = 0.0;
    for i in 0..mx {
        for j in 0..my {
            let (gi, gj) = (i + 1, j + 1);
            let (a, c) = (x1.node(gi), x2.node(gj));
            let r = rhs(a, c);
            if !r.is_finite() {
                return Err(PoissonError::NonFinite { x1: a, x2: c });
            }
            rhs_max = rhs_max.max(r.abs());
            let mut v = -r;
            if gi == 1 {
                v += st.cx * psi[(gi - 1) * ny + gj];
            }
            if gi + 1 == nx - 1 {
                v += st.cx * psi[(gi + 1) * ny + gj];
            }
            if gj == 1 {
                v += st.cy * psi[gi * ny + gj - 1];
            }
            if gj + 1 == ny - 1 {
                v += st.cy * psi[gi * ny + gj + 1];
            }
            b[i * my + j] = v;
        }
    }

    let (u, method) = if nx * ny <= options.direct_limit {
        (banded_cholesky_solve(&st, &b)?, PoissonMethod::BandedCholesky)
    } else {
        let (u, it) = conjugate_gradient(&st, &b, options)?;
        (u, PoissonMethod::ConjugateGradient { iterations: it })
    };
    for i in 0..mx {
        for j in 0..my {
            psi[(i + 1) * ny + j + 1] = u[i * my + j];
        }
    }

    let mut residual: f64 = 0.0;
    let mut psi_max: f64 = 0.0;
    for v in &psi {
        psi_max = psi_max.max(v.abs());
    }
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let c = psi[i * ny + j];
            let lap = st.cx * (psi[(i - 1) * ny + j] - 2.0 * c + psi[(i + 1) * ny + j])
                + st.cy * (psi[i * ny + j - 1] - 2.0 * c + psi[i * ny + j + 1]);
            residual = residual.max((lap - rhs(x1.node(i), x2.node(j))).abs());
        }
    }
    let scale = rhs_max.max(psi_max * 2.0 * (st.cx + st.cy)).max(f64::MIN_POSITIVE);
    Ok(PoissonSolution { x1, x2, values: psi, method, residual, relative_residual: residual / scale })
}

fn banded_cholesky_solve(st: &Stencil, b: &[f64]) -> Result<Vec<f64>, PoissonError> {
    let (mx, my) = st.interior();
    let n = mx * my;
    let bw = my;
    // band[k * (bw + 1) + d] holds A[k][k - d]
    let w = bw + 1;
    let mut band = vec![0.0; n * w];
    let diag = 2.0 * (st.cx + st.cy);
    for k in 0..n {
        band[k * w] = diag;
        if k % my != 0 {
            band[k * w + 1] = -st.cy;
        }
        if k >= my {
            band[k * w + bw] = -st.cx;
        }
    }
    // In-place banded Cholesky: L stored in the same layout.
    for k in 0..n {
        let lo = k.saturating_sub(bw);
        for j in lo..k {
            let d = k - j;
            let mut s = band[k * w + d];
            let jlo = lo.max(j.saturating_sub(bw));
            for m in jlo..j {
                s -= band[k * w + (k - m)] * band[j * w + (j - m)];
            }
            band[k * w + d] = s / band[j * w];
        }
        let mut s = band[k * w];
        for m in lo..k {
            let l = band[k * w + (k - m)];
            s -= l * l;
        }
        if s <= 0.0 {
            return Err(PoissonError::Factorisation);
        }
        band[k * w] = s.sqrt();
    }
    let mut y = b.to_vec();
    for k in 0..n {
        let lo = k.saturating_sub(bw);
        let mut s = y[k];
        for m in lo..k {
            s -= band[k * w + (k - m)] * y[m];
        }
        y[k] = s / band[k * w];
    }
    for k in (0..n).rev() {
        let hi = (k + bw).min(n - 1);
        let mut s = y[k];
        for m in k + 1..=hi {
            s -= band[m * w + (m - k)] * y[m];
        }
        y[k] = s / band[k * w];
    }
    Ok(y)
}

fn conjugate_gradient(st: &Stencil, b: &[f64], options: PoissonOptions) -> Result<(Vec<f64>, usize), PoissonError> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.par_iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..options.cg_max_iterations {
        if rr.sqrt() / bnorm < options.cg_tolerance {
            return Ok((x, it));
        }
        st.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.par_iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Err(PoissonError::NotConverged { iterations: options.cg_max_iterations, residual: rr.sqrt() / bnorm })
}
