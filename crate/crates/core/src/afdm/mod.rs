//! Off-diagonal solution generator: from generating data build the
//! coefficients of torsionful and Levi-Civita cosmological d-metrics.
//!
//! Conventions: h3 = ε3 Φ̂²/(4|Λ|), h4 = ε3ε4 (Φ^◇/Φ)(h3^◇/h3)/(2 ᵛΥ),
//! w_i = ∂_iΦ/Φ^◇ and n_k = ₁n_k + ₂n_k ∫ h4/|h3|^{3/2} dt, with the default
//! signs ε3 = sign Λ, ε4 = −ε3.

mod checks;

pub use checks::{
    check_lc, epsilon_family, line_potential, n_formula_residual, system_residuals, LcReport, LinePotential,
    SystemResiduals, LC_TOLERANCE,
};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fieldkit::{
    cumulative_time_integral, sample, solve_poisson_2d, Axis, Field, FieldError, Grid3, GridError, PoissonError,
    PoissonOptions,
};
use crate::nageometry::{check_lorentzian, DMetric, GeometryError};

/// Below this magnitude Φ^◇, h3 or a source counts as vanishing.
pub const VANISHING: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfdmError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("the effective cosmological constant must be non-zero")]
    ZeroLambda,
    #[error("negative radicand {value:e} at {point:?}: sign of Λ does not match the source")]
    NegativeRadicand { point: [f64; 3], value: f64 },
    #[error("source vanishes at {point:?}")]
    ZeroSource { point: [f64; 3] },
    #[error("time derivative of the generating function vanishes at {point:?}")]
    ZeroTimeDerivative { point: [f64; 3] },
    #[error("h3 vanishes or changes sign at {point:?}")]
    H3Crossing { point: [f64; 3] },
    #[error("w_i is not curl-free at {point:?} (curl = {curl:e})")]
    NotCurlFree { point: [f64; 3], curl: f64 },
    #[error("the Levi-Civita branch needs a Φ̌ generating function")]
    NeedsPhiCheck,
}

/// The generating function and how it enters.
#[derive(Clone, Debug)]
pub enum Generating {
    /// Φ̂: Φ follows from the redefinition with source ᵛΥ.
    PhiHat(Field),
    /// Φ̌: Φ = Φ̂ = Φ̌ with the source replaced by Λ.
    PhiCheck(Field),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OmegaMode {
    Unit,
    /// ω² = |h4|⁻¹.
    InverseH4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Torsionful,
    LeviCivita,
}

#[derive(Clone, Debug)]
pub struct GeneratingData {
    /// ψ(x1, x2) with g1 = g2 = e^ψ.
    pub psi: Field,
    pub h_upsilon: Field,
    pub v_upsilon: Field,
    pub generating: Generating,
    pub lambda: f64,
    /// ₁n_k.
    pub n1fun: [Field; 2],
    /// ₂n_k.
    pub n2fun: [Field; 2],
    /// n(x1, x2) with n_k = ∂_k n on the Levi-Civita branch.
    pub n_potential: Option<Field>,
    pub a_factor: Field,
    /// (ε3, ε4); defaults to (sign Λ, −sign Λ).
    pub signs: Option<(f64, f64)>,
    pub omega_mode: OmegaMode,
}

impl GeneratingData {
    /// Data with Λ-sources, unit scale factor, zero integration functions and
    /// default signs.
    pub fn new(psi: Field, generating: Generating, lambda: f64) -> Self {
        let zero = Field::constant(0.0);
        GeneratingData {
            psi,
            h_upsilon: Field::constant(lambda),
            v_upsilon: Field::constant(lambda),
            generating,
            lambda,
            n1fun: [zero.clone(), zero.clone()],
            n2fun: [zero.clone(), zero],
            n_potential: None,
            a_factor: Field::constant(1.0),
            signs: None,
            omega_mode: OmegaMode::Unit,
        }
    }

    pub fn signs(&self) -> (f64, f64) {
        self.signs.unwrap_or_else(|| {
            let e3 = self.lambda.signum();
            (e3, -e3)
        })
    }
}

/// ψ solving ∂₁²ψ + ∂₂²ψ = 2ʰΥ on a rectangle with Dirichlet data.
pub fn psi_from_poisson(
    h_upsilon: &Field,
    x1: Axis,
    x2: Axis,
    boundary: &Field,
    options: PoissonOptions,
) -> Result<(Field, f64), AfdmError> {
    let err = std::sync::Mutex::new(None);
    let eval = |f: &Field, a: f64, b: f64| match f.value([a, b, 0.0]) {
        Ok(v) => v,
        Err(e) => {
            err.lock().unwrap().get_or_insert(e);
            f64::NAN
        }
    };
    let sol = solve_poisson_2d(&|a, b| 2.0 * eval(h_upsilon, a, b), x1, x2, &|a, b| eval(boundary, a, b), options);
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e.into());
    }
    let sol = sol?;
    Ok((sol.field(), sol.relative_residual))
}

/// Result of the generating-function redefinition.
#[derive(Clone, Debug)]
pub struct Redefinition {
    pub field: Field,
    /// Smallest value of the squared result over the grid.
    pub min_square: f64,
    /// Pointwise residual of Λ(Φ²)^◇ = |ᵛΥ|(Φ̂²)^◇ plus the initial relation,
    /// normalised, sup over the grid.
    pub relation_residual: f64,
    /// Difference between the field quadrature and grid Simpson integration.
    pub grid_crosscheck: f64,
    /// Forward square with a plus sign in front of the integral, kept for
    /// comparison only (it violates the defining relation).
    pub printed_square: Option<Field>,
}

/// Φ² = Λ⁻¹[Φ̂²|ᵛΥ| − ∫_{t0}^t Φ̂²|ᵛΥ|^◇ dt] (forward) or its inverse
/// Φ̂² = Λ Φ²(t0)/|ᵛΥ(t0)| + ∫_{t0}^t Λ(Φ²)^◇/|ᵛΥ| dt, with t0 the first t node.
pub fn redefine_generating(
    input: &Field,
    v_upsilon: &Field,
    lambda: f64,
    grid: &Grid3,
    direction: Direction,
) -> Result<Redefinition, AfdmError> {
    if lambda == 0.0 {
        return Err(AfdmError::ZeroLambda);
    }
    let t0 = grid.t.lo;
    let ups = v_upsilon.abs();
    let sq = input * input;
    let mut printed_square = None;
    let (square, integrand) = match direction {
        Direction::Forward => {
            let integrand = &sq * &ups.partial(2);
            printed_square = Some((&(&sq * &ups) + &integrand.time_integral(t0)) * (1.0 / lambda));
            ((&(&sq * &ups) - &integrand.time_integral(t0)) * (1.0 / lambda), integrand)
        }
        Direction::Inverse => {
            let integrand = lambda * &(&sq.partial(2) / &ups);
            let start = &sq.at_time(t0) / &ups.at_time(t0);
            (&(lambda * &start) + &integrand.time_integral(t0), integrand)
        }
    };
    let points = grid.points();
    let checks = points
        .par_iter()
        .map(|&p| -> Result<(f64, f64), AfdmError> {
            if ups.value(p)? < VANISHING {
                return Err(AfdmError::ZeroSource { point: p });
            }
            let s = square.jet(p, 1)?;
            if s.value() < 0.0 {
                return Err(AfdmError::NegativeRadicand { point: p, value: s.value() });
            }
            let i = sq.jet(p, 1)?;
            let u = ups.jet(p, 0)?.value();
            let (out_dot, in_dot) = match direction {
                Direction::Forward => (s.derivative(2).value(), i.derivative(2).value()),
                Direction::Inverse => (i.derivative(2).value(), s.derivative(2).value()),
            };
            let lhs = lambda * out_dot;
            let rhs = u * in_dot;
            let res = (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs());
            Ok((s.value(), res))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let min_square = checks.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let mut relation_residual = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    // initial relation at t0 (integral terms vanish there)
    for i in 0..grid.x1.n {
        for j in 0..grid.x2.n {
            let p = [grid.x1.node(i), grid.x2.node(j), t0];
            let (s, x, u) = (square.value(p)?, sq.value(p)?, ups.value(p)?);
            let want = match direction {
                Direction::Forward => x * u / lambda,
                Direction::Inverse => lambda * x / u,
            };
            relation_residual = relation_residual.max((s - want).abs() / 1f64.max(s.abs()));
        }
    }
    let int_grid = cumulative_time_integral(&sample(&integrand, grid)?, t0)?;
    let int_field = sample(&integrand.time_integral(t0), grid)?;
    let grid_crosscheck = int_grid
        .values
        .iter()
        .zip(&int_field.values)
        .map(|(a, b)| (a - b).abs() / 1f64.max(b.abs()))
        .fold(0.0, f64::max);
    Ok(Redefinition { field: square.sqrt(), min_square, relation_residual, grid_crosscheck, printed_square })
}

/// Coefficient fields of a generated solution.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub h3: Field,
    pub h4: Field,
    pub n: [Field; 2],
    pub w: [Field; 2],
    /// Φ entering w_i and the h4 chain.
    pub phi: Field,
    /// Source ᵛΥ used in the chain (Λ for a Φ̌ input).
    pub v_source: Field,
    /// h4 in the printed closed form (Φ̂²)^◇ / (8[Φ̂²|ᵛΥ| + ∫Φ̂²|ᵛΥ|^◇]),
    /// kept for comparison only.
    pub h4_printed: Field,
}

/// n_k = ₁n_k + ₂n_k ∫_{t0}^t h4/|h3|^{3/2} dt.
pub fn n_coefficient(n1: &Field, n2: &Field, h3: &Field, h4: &Field, t0: f64) -> Field {
    if n2.as_constant() == Some(0.0) {
        return n1.clone();
    }
    let kernel = h4 / &h3.abs().powf(1.5);
    n1 + &(n2 * &kernel.time_integral(t0))
}

pub fn build_coefficients(g: &GeneratingData, grid: &Grid3) -> Result<Coefficients, AfdmError> {
    if g.lambda == 0.0 {
        return Err(AfdmError::ZeroLambda);
    }
    let (e3, e4) = g.signs();
    let (hat, phi, source) = match &g.generating {
        Generating::PhiHat(hat) => {
            let red = redefine_generating(hat, &g.v_upsilon, g.lambda, grid, Direction::Forward)?;
            (hat.clone(), red.field, g.v_upsilon.clone())
        }
        Generating::PhiCheck(check) => (check.clone(), check.clone(), Field::constant(g.lambda)),
    };
    let h3 = (e3 / (4.0 * g.lambda.abs())) * &(&hat * &hat);
    let dphi = phi.partial(2);
    let h4 = (e3 * e4 * 0.5) * &(&(&(&dphi / &phi) * &(&h3.partial(2) / &h3)) / &source);
    let w = [&phi.partial(0) / &dphi, &phi.partial(1) / &dphi];
    let t0 = grid.t.lo;
    let n =
        [n_coefficient(&g.n1fun[0], &g.n2fun[0], &h3, &h4, t0), n_coefficient(&g.n1fun[1], &g.n2fun[1], &h3, &h4, t0)];
    let ups = source.abs();
    let hat2 = &hat * &hat;
    let bracket = &(&hat2 * &ups) + &(&hat2 * &ups.partial(2)).time_integral(t0);
    let h4_printed = &hat2.partial(2) / &(8.0 * &bracket);

    let points = grid.points();
    let h3_sign = h3.value(points[0])?.signum();
    points.par_iter().try_for_each(|&p| -> Result<(), AfdmError> {
        if dphi.value(p)?.abs() < VANISHING {
            return Err(AfdmError::ZeroTimeDerivative { point: p });
        }
        let v = h3.value(p)?;
        if v.abs() < VANISHING || v.signum() != h3_sign {
            return Err(AfdmError::H3Crossing { point: p });
        }
        if source.value(p)?.abs() < VANISHING {
            return Err(AfdmError::ZeroSource { point: p });
        }
        Ok(())
    })?;
    Ok(Coefficients { h3, h4, n, w, phi, v_source: source, h4_printed })
}

/// η-polarizations relative to the scale factor a.
#[derive(Clone, Debug)]
pub struct Polarizations {
    pub eta1: Field,
    pub eta2: Field,
    pub eta3: Field,
    pub eta4: Field,
    /// ĥ3 = h3/(a²|h4|).
    pub h3_hat: Field,
}

#[derive(Clone, Debug)]
pub struct AfdmSolution {
    pub metric: DMetric,
    pub branch: Branch,
    pub polarizations: Polarizations,
    pub coefficients: Coefficients,
    pub provenance: GeneratingData,
    pub grid: Grid3,
}

impl AfdmSolution {
    /// Sources (ʰΥ, ᵛΥ) the solution was generated for.
    pub fn sources(&self) -> (Field, Field) {
        (self.provenance.h_upsilon.clone(), self.coefficients.v_source.clone())
    }
}

fn assemble(g: &GeneratingData, grid: &Grid3, c: Coefficients, branch: Branch) -> Result<AfdmSolution, AfdmError> {
    let g12 = g.psi.exp();
    let omega = match g.omega_mode {
        OmegaMode::Unit => Field::constant(1.0),
        OmegaMode::InverseH4 => c.h4.abs().powf(-0.5),
    };
    let metric = DMetric {
        g1: g12.clone(),
        g2: g12.clone(),
        h3: c.h3.clone(),
        h4: c.h4.clone(),
        n1: c.n[0].clone(),
        n2: c.n[1].clone(),
        w1: c.w[0].clone(),
        w2: c.w[1].clone(),
        omega,
    };
    grid.points().par_iter().try_for_each(|&p| check_lorentzian(&metric, p))?;
    let a2 = &g.a_factor * &g.a_factor;
    let eta = &g12 / &a2;
    let polarizations = Polarizations {
        eta1: eta.clone(),
        eta2: eta,
        eta3: &c.h3 / &a2,
        eta4: Field::constant(1.0),
        h3_hat: &c.h3 / &(&a2 * &c.h4.abs()),
    };
    Ok(AfdmSolution { metric, branch, polarizations, coefficients: c, provenance: g.clone(), grid: *grid })
}

/// Solution with nonholonomically induced torsion.
pub fn assemble_torsionful(g: &GeneratingData, grid: &Grid3) -> Result<AfdmSolution, AfdmError> {
    let c = build_coefficients(g, grid)?;
    assemble(g, grid, c, Branch::Torsionful)
}

/// Levi-Civita solution: n_k = ∂_k n, w_i = ∂_iΦ̌/Φ̌^◇ with curl-free w.
pub fn assemble_lc(g: &GeneratingData, grid: &Grid3) -> Result<AfdmSolution, AfdmError> {
    if !matches!(g.generating, Generating::PhiCheck(_)) {
        return Err(AfdmError::NeedsPhiCheck);
    }
    let zero = Field::constant(0.0);
    let mut lc = g.clone();
    lc.n1fun = match &g.n_potential {
        Some(n) => [n.partial(0), n.partial(1)],
        None => [zero.clone(), zero.clone()],
    };
    lc.n2fun = [zero.clone(), zero];
    let c = build_coefficients(&lc, grid)?;
    grid.points().par_iter().try_for_each(|&p| -> Result<(), AfdmError> {
        let a = c.w[1].jet(p, 1)?.derivative(0).value();
        let b = c.w[0].jet(p, 1)?.derivative(1).value();
        let curl = (a - b).abs() / 1f64.max(a.abs()).max(b.abs());
        if curl > LC_TOLERANCE {
            return Err(AfdmError::NotCurlFree { point: p, curl });
        }
        Ok(())
    })?;
    assemble(&lc, grid, c, Branch::LeviCivita)
}

/// Column order of [`metric_csv`].
pub const METRIC_COLUMNS: [&str; 12] = ["x1", "x2", "t", "g1", "g2", "h3", "h4", "n1", "n2", "w1", "w2", "omega"];

/// Samples of the d-metric coefficients on a grid, one row per node.
pub fn metric_samples(m: &DMetric, grid: &Grid3) -> Result<Vec<[f64; 12]>, FieldError> {
    grid.points()
        .par_iter()
        .map(|&p| {
            let s = m.sample(p)?;
            let mut row = [0.0; 12];
            row[..3].copy_from_slice(&p);
            row[3..].copy_from_slice(&s);
            Ok(row)
        })
        .collect()
}

/// CSV text of [`metric_samples`] with a header row.
pub fn metric_csv(m: &DMetric, grid: &Grid3) -> Result<String, FieldError> {
    let mut out = METRIC_COLUMNS.join(",");
    out.push('\n');
    for row in metric_samples(m, grid)? {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
