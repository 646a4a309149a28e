//! Python bindings: expressions, solution assembly and checks, and the
//! cosmological reconstruction and stability routines.

use std::collections::BTreeMap;
use std::fmt::Display;

use afdm_core::afdm::{
    assemble_lc as core_assemble_lc, assemble_torsionful as core_assemble_torsionful, check_lc, metric_samples,
    system_residuals, AfdmSolution, Generating, GeneratingData, METRIC_COLUMNS,
};
use afdm_core::cosmodyn::{
    big_rip_fit as core_big_rip_fit, efolding_lcdm, evolve_coupled_dedm, FluidSpec, LcdmSpec, TRAJECTORY_COLUMNS,
};
use afdm_core::fieldkit::{parse_expression, Axis, Expr, Field, Grid3, Point, XT_VARS};
use afdm_core::nageometry::{canonical_dtorsion, einstein_residual};
use afdm_core::reconstruct::{
    chi_constants as core_chi_constants, compare_fgt_exponents, euler_reconstruct as core_euler_reconstruct,
    f1gen_scan, hyp2f1 as core_hyp2f1, lcdm_chi_constants as core_lcdm_chi_constants, lcdm_model, lcdm_q_field,
    F1genMatter, H0Convention, IndicialRoots, RootChoice,
};
use afdm_core::stability::{oscillator_criterion as core_oscillator_criterion, StabilityInputs};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn field(text: &str) -> PyResult<Field> {
    parse_expression(text, &XT_VARS).map(Field::expr).map_err(value_err)
}

/// A parsed expression in x1, x2, t.
#[pyclass(name = "Expression", frozen)]
struct PyExpression {
    text: String,
    expr: Expr,
}

#[pymethods]
impl PyExpression {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let expr = parse_expression(text, &XT_VARS).map_err(value_err)?;
        Ok(PyExpression { text: text.to_string(), expr })
    }

    fn __call__(&self, x1: f64, x2: f64, t: f64) -> PyResult<f64> {
        self.expr.eval_at(Point::new(x1, x2, t)).map_err(value_err)
    }

    /// Exact first derivatives (d/dx1, d/dx2, d/dt).
    fn gradient(&self, x1: f64, x2: f64, t: f64) -> PyResult<[f64; 3]> {
        let j = self.expr.jet([x1, x2, t], 1).map_err(value_err)?;
        Ok([0, 1, 2].map(|k| j.derivative(k).value()))
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.text)
    }
}

/// Tensor-product sampling grid; each axis is (lo, hi, n).
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    grid: Grid3,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(x1: (f64, f64, usize), x2: (f64, f64, usize), t: (f64, f64, usize)) -> PyResult<Self> {
        let grid = Grid3::new(Axis::new(x1.0, x1.1, x1.2), Axis::new(x2.0, x2.1, x2.2), Axis::new(t.0, t.1, t.2))
            .map_err(value_err)?;
        Ok(PyGrid { grid })
    }

    fn points(&self) -> Vec<[f64; 3]> {
        self.grid.points()
    }

    fn __len__(&self) -> usize {
        self.grid.points().len()
    }
}

/// An assembled metric with its residual checks.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    sol: AfdmSolution,
}

#[pymethods]
impl PySolution {
    #[classattr]
    fn metric_columns() -> Vec<&'static str> {
        METRIC_COLUMNS.to_vec()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.sol.provenance.lambda
    }

    /// One row per grid point, in `metric_columns` order.
    fn metric_samples(&self) -> PyResult<Vec<[f64; 12]>> {
        metric_samples(&self.sol.metric, &self.sol.grid).map_err(value_err)
    }

    /// (sup, rms) of |R^a_b − Λδ^a_b| over the grid.
    fn einstein_residual(&self) -> PyResult<(f64, f64)> {
        let r = einstein_residual(&self.sol.metric, self.sol.provenance.lambda, &self.sol.grid.points())
            .map_err(value_err)?;
        Ok((r.sup, r.rms))
    }

    fn system_residuals(&self) -> PyResult<BTreeMap<&'static str, f64>> {
        let (hu, vu) = self.sol.sources();
        let r = system_residuals(&self.sol, (&hu, &vu), &self.sol.grid.points()).map_err(value_err)?;
        Ok(BTreeMap::from([
            ("eq1m", r.eq1m),
            ("eq2m", r.eq2m),
            ("eq3m", r.eq3m),
            ("eq4m", r.eq4m),
            ("confeq", r.confeq),
        ]))
    }

    fn lc_conditions(&self) -> PyResult<BTreeMap<&'static str, f64>> {
        let r = check_lc(&self.sol.metric, &self.sol.grid.points()).map_err(value_err)?;
        Ok(r.values().into_iter().collect())
    }

    /// Largest torsion component over the grid.
    fn max_torsion(&self) -> PyResult<f64> {
        let mut worst: f64 = 0.0;
        for p in self.sol.grid.points() {
            worst = worst.max(canonical_dtorsion(&self.sol.metric, p).map_err(value_err)?.max_norm);
        }
        Ok(worst)
    }
}

/// Levi-Civita solution from Φ̌; `psi` defaults to (Λ/2)(x1² + x2²).
#[pyfunction]
#[pyo3(signature = (lambda_, phi_check, grid, psi=None, n_potential=None))]
fn assemble_lc(
    lambda_: f64,
    phi_check: &str,
    grid: &PyGrid,
    psi: Option<&str>,
    n_potential: Option<&str>,
) -> PyResult<PySolution> {
    let psi = match psi {
        Some(s) => field(s)?,
        None => field(&format!("{} * (x1^2 + x2^2)", lambda_ / 2.0))?,
    };
    let mut g = GeneratingData::new(psi, Generating::PhiCheck(field(phi_check)?), lambda_);
    g.n_potential = n_potential.map(field).transpose()?;
    let sol = core_assemble_lc(&g, &grid.grid).map_err(value_err)?;
    Ok(PySolution { sol })
}

/// Torsionful solution from Φ̂ and the sources (ʰΥ, ᵛΥ).
#[pyfunction]
#[pyo3(signature = (lambda_, phi_hat, psi, h_upsilon, v_upsilon, grid, n1=("0", "0"), n2=("0", "0")))]
#[allow(clippy::too_many_arguments)]
fn assemble_torsionful(
    lambda_: f64,
    phi_hat: &str,
    psi: &str,
    h_upsilon: &str,
    v_upsilon: &str,
    grid: &PyGrid,
    n1: (&str, &str),
    n2: (&str, &str),
) -> PyResult<PySolution> {
    let mut g = GeneratingData::new(field(psi)?, Generating::PhiHat(field(phi_hat)?), lambda_);
    g.h_upsilon = field(h_upsilon)?;
    g.v_upsilon = field(v_upsilon)?;
    g.n1fun = [field(n1.0)?, field(n1.1)?];
    g.n2fun = [field(n2.0)?, field(n2.1)?];
    let sol = core_assemble_torsionful(&g, &grid.grid).map_err(value_err)?;
    Ok(PySolution { sol })
}

#[pyfunction]
fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> PyResult<f64> {
    core_hyp2f1(a, b, c, x).map_err(value_err)
}

/// The stated Gauss constants (χ1, χ2, χ3).
#[pyfunction]
fn chi_constants() -> (f64, f64, f64) {
    core_chi_constants()
}

/// Gauss constants that solve the ΛCDM reduction without matter.
#[pyfunction]
fn lcdm_chi_constants() -> (f64, f64, f64) {
    core_lcdm_chi_constants()
}

/// Rows (zeta, q, Rhat, X, f, f1gen_residual) of the reconstructed ΛCDM model.
#[pyfunction]
#[pyo3(signature = (h0, rho0, zetas, chi=None, a0=1.0, kappa2=1.0))]
fn lcdm_scan(
    h0: f64,
    rho0: f64,
    zetas: Vec<f64>,
    chi: Option<(f64, f64, f64)>,
    a0: f64,
    kappa2: f64,
) -> PyResult<Vec<[f64; 6]>> {
    if zetas.is_empty() {
        return Ok(Vec::new());
    }
    let spec = LcdmSpec { h0, rho0, a0, kappa2 };
    let (lo, hi) = zetas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &z| (l.min(z), h.max(z)));
    let model =
        lcdm_model(&spec, chi.unwrap_or_else(core_chi_constants), lo, hi, 2 * zetas.len() + 1).map_err(value_err)?;
    let pts = f1gen_scan(&model, &lcdm_q_field(&spec), &F1genMatter::none(), &zetas).map_err(value_err)?;
    Ok(pts
        .iter()
        .map(|p| {
            let e = efolding_lcdm(&spec, p.zeta);
            [p.zeta, e.q, e.rhat, e.x, p.f, p.residual]
        })
        .collect())
}

/// Power-law f(R) of a phantom background.
#[pyclass(name = "EulerReconstruction", frozen, get_all)]
struct PyEuler {
    w_ph: f64,
    h0: f64,
    a: f64,
    b: f64,
    /// Indicial roots as (real, imaginary) pairs.
    roots: [(f64, f64); 2],
    t_s: f64,
}

#[pyfunction]
#[pyo3(signature = (w_ph, linear=false))]
fn euler_reconstruct(w_ph: f64, linear: bool) -> PyResult<PyEuler> {
    let conv = if linear { H0Convention::Linear } else { H0Convention::Inverse };
    let e = core_euler_reconstruct(w_ph, conv).map_err(value_err)?;
    let roots = match e.roots {
        IndicialRoots::Real { plus, minus } => [(plus, 0.0), (minus, 0.0)],
        IndicialRoots::Complex { re, im } => [(re, im), (re, -im)],
    };
    Ok(PyEuler { w_ph: e.w_ph, h0: e.h0, a: e.a, b: e.b, roots, t_s: e.rip.t_s })
}

/// Interacting dark energy and dark matter background.
#[pyclass(name = "DedmRun", frozen, get_all)]
struct PyDedm {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
    converged: bool,
    final_hubble: f64,
    expected_hubble: f64,
    final_ratio: f64,
    printed_ratio: f64,
    singular: Option<String>,
}

#[pyfunction]
#[pyo3(signature = (varpi, q, rho_de, rho_dm, t_end, samples=101, kappa2=1.0, a0=1.0))]
#[allow(clippy::too_many_arguments)]
fn evolve_dedm(
    varpi: f64,
    q: f64,
    rho_de: f64,
    rho_dm: f64,
    t_end: f64,
    samples: usize,
    kappa2: f64,
    a0: f64,
) -> PyResult<PyDedm> {
    let spec = FluidSpec::new(varpi, q, rho_de, rho_dm, kappa2);
    let run = evolve_coupled_dedm(&spec, a0, (0.0, t_end), samples).map_err(value_err)?;
    let rows = run
        .trajectory
        .s
        .iter()
        .zip(&run.trajectory.states)
        .map(|(s, y)| std::iter::once(*s).chain(y.iter().copied()).collect())
        .collect();
    let r = run.report;
    Ok(PyDedm {
        columns: TRAJECTORY_COLUMNS.to_vec(),
        rows,
        converged: r.converged,
        final_hubble: r.final_hubble,
        expected_hubble: r.expected_hubble,
        final_ratio: r.final_ratio,
        printed_ratio: r.printed_ratio,
        singular: r.singular,
    })
}

/// (t_s, fitted exponent, law residual) of the Big Rip divergence.
#[pyfunction]
fn big_rip_fit(varpi: f64, h0: f64) -> PyResult<(f64, f64, f64)> {
    let f = core_big_rip_fit(varpi, h0).map_err(value_err)?;
    Ok((f.t_s, f.exponent, f.law_residual))
}

/// Printed exponents, derived roots, largest mismatch and the adopted set.
#[pyfunction]
#[pyo3(signature = (tol=0.01))]
fn fgt_exponents(tol: f64) -> ([(f64, f64); 3], [f64; 3], f64, &'static str) {
    let c = compare_fgt_exponents(tol);
    let adopted = match c.adopted {
        RootChoice::Printed => "printed",
        RootChoice::Derived => "derived",
    };
    (c.printed, c.derived, c.max_mismatch, adopted)
}

/// (pass, margin) of the perturbation oscillator criterion.
#[pyfunction]
#[pyo3(signature = (xi0, p0, t0, f1_1, f2, f1=0.0, matter_l=0.0, kappa2=1.0, source=None))]
#[allow(clippy::too_many_arguments)]
fn oscillator_criterion(
    xi0: f64,
    p0: f64,
    t0: f64,
    f1_1: f64,
    f2: f64,
    f1: f64,
    matter_l: f64,
    kappa2: f64,
    source: Option<f64>,
) -> PyResult<(bool, f64)> {
    let s = StabilityInputs { xi0, p0, t0, f1_1, f1, f2, matter_l, kappa2, source_override: source };
    let c = core_oscillator_criterion(&s).map_err(value_err)?;
    Ok((c.pass, c.margin))
}

#[pymodule]
fn afdm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyEuler>()?;
    m.add_class::<PyDedm>()?;
    m.add_function(wrap_pyfunction!(assemble_lc, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_torsionful, m)?)?;
    m.add_function(wrap_pyfunction!(hyp2f1, m)?)?;
    m.add_function(wrap_pyfunction!(chi_constants, m)?)?;
    m.add_function(wrap_pyfunction!(lcdm_chi_constants, m)?)?;
    m.add_function(wrap_pyfunction!(lcdm_scan, m)?)?;
    m.add_function(wrap_pyfunction!(euler_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_dedm, m)?)?;
    m.add_function(wrap_pyfunction!(big_rip_fit, m)?)?;
    m.add_function(wrap_pyfunction!(fgt_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(oscillator_criterion, m)?)?;
    Ok(())
}
