//! Residuals of the decoupled field equations, the Levi-Civita conditions,
//! line potentials and the small-deformation family.

use rayon::prelude::*;
use serde::Serialize;

use super::{AfdmError, AfdmSolution};
use crate::fieldkit::quadrature::integrate;
use crate::fieldkit::{Field, FieldError, Grid3, GridField, Jet};
use crate::nageometry::DMetric;

/// Pass threshold for each Levi-Civita condition.
pub const LC_TOLERANCE: f64 = 1e-8;

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// Sup-norms of the normalised residuals |lhs − rhs| / max(1, |lhs|, |rhs|).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SystemResiduals {
    /// ∂₁²ψ + ∂₂²ψ = 2ʰΥ.
    pub eq1m: f64,
    /// φ^◇h3^◇ = 2ε3ε4 h3h4 ᵛΥ.
    pub eq2m: f64,
    /// n_k^◇◇ + γ n_k^◇ = 0.
    pub eq3m: f64,
    /// β w_i = α_i.
    pub eq4m: f64,
    /// e_i ω = ∂_iω − w_i ω^◇ = 0.
    pub confeq: f64,
}

impl SystemResiduals {
    pub fn max(&self) -> f64 {
        self.eq1m.max(self.eq2m).max(self.eq3m).max(self.eq4m).max(self.confeq)
    }

    fn merge(self, o: Self) -> Self {
        SystemResiduals {
            eq1m: self.eq1m.max(o.eq1m),
            eq2m: self.eq2m.max(o.eq2m),
            eq3m: self.eq3m.max(o.eq3m),
            eq4m: self.eq4m.max(o.eq4m),
            confeq: self.confeq.max(o.confeq),
        }
    }
}

/// φ = ln|h3^◇ / √|h3 h4||.
fn phi_jet(h3: &Jet, h4: &Jet) -> Jet {
    let dh3 = h3.derivative(2);
    let o = dh3.order();
    (dh3.abs() * (h3.truncate(o) * h4.truncate(o)).abs().sqrt().recip()).ln()
}

/// γ n^◇ + n^◇◇ for a jet of order ≥ 2.
fn eq3m_terms(n: &Jet, h3: &Jet, h4: &Jet) -> (f64, f64) {
    let dn = n.derivative(2);
    let ddn = dn.derivative(2).value();
    let g = (h3.abs().powf(1.5) * h4.abs().recip()).ln().derivative(2).value();
    (ddn, -g * dn.value())
}

fn residuals_at(m: &DMetric, hu: &Field, vu: &Field, e34: f64, p: [f64; 3]) -> Result<SystemResiduals, FieldError> {
    let psi = m.g1.jet(p, 2)?.abs().ln();
    let lap = psi.derivative(0).derivative(0).value() + psi.derivative(1).derivative(1).value();
    let eq1m = rel(lap, 2.0 * hu.value(p)?);

    let h3 = m.h3.jet(p, 2)?;
    let h4 = m.h4.jet(p, 2)?;
    let phi = phi_jet(&h3, &h4);
    let dh3 = h3.derivative(2).value();
    let dphi = phi.derivative(2).value();
    let eq2m = rel(dphi * dh3, 2.0 * e34 * h3.value() * h4.value() * vu.value(p)?);

    let mut eq3m: f64 = 0.0;
    let mut eq4m: f64 = 0.0;
    let mut confeq: f64 = 0.0;
    let om = m.omega.jet(p, 1)?;
    for (k, (n, w)) in [(&m.n1, &m.w1), (&m.n2, &m.w2)].into_iter().enumerate() {
        let (a, b) = eq3m_terms(&n.jet(p, 2)?, &h3, &h4);
        eq3m = eq3m.max(rel(a, b));
        let wv = w.value(p)?;
        eq4m = eq4m.max(rel(dh3 * dphi * wv, dh3 * phi.derivative(k).value()));
        confeq = confeq.max(rel(om.derivative(k).value(), wv * om.derivative(2).value()));
    }
    Ok(SystemResiduals { eq1m, eq2m, eq3m, eq4m, confeq })
}

/// Residuals of the decoupled system for a generated solution, sup over `points`.
pub fn system_residuals(
    s: &AfdmSolution,
    sources: (&Field, &Field),
    points: &[[f64; 3]],
) -> Result<SystemResiduals, AfdmError> {
    system_residuals_for(&s.metric, sources, s.provenance.signs(), points)
}

/// As [`system_residuals`] for an arbitrary d-metric and signs (ε3, ε4).
pub fn system_residuals_for(
    m: &DMetric,
    sources: (&Field, &Field),
    signs: (f64, f64),
    points: &[[f64; 3]],
) -> Result<SystemResiduals, AfdmError> {
    let e34 = signs.0 * signs.1;
    let per =
        points.par_iter().map(|&p| residuals_at(m, sources.0, sources.1, e34, p)).collect::<Result<Vec<_>, _>>()?;
    Ok(per.into_iter().fold(SystemResiduals::default(), SystemResiduals::merge))
}

/// Sup of the eq3m residual for n_k built from (h3, h4) by the n-formula.
pub fn n_formula_residual(
    h3: &Field,
    h4: &Field,
    n1: &Field,
    n2: &Field,
    t0: f64,
    points: &[[f64; 3]],
) -> Result<f64, AfdmError> {
    let n = super::n_coefficient(n1, n2, h3, h4, t0);
    let per = points
        .par_iter()
        .map(|&p| -> Result<f64, FieldError> {
            let (a, b) = eq3m_terms(&n.jet(p, 2)?, &h3.jet(p, 2)?, &h4.jet(p, 2)?);
            Ok(rel(a, b))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per.into_iter().fold(0.0, f64::max))
}

/// Sup-norms of the five Levi-Civita conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LcReport {
    /// w_i^◇ = (∂_i − w_i∂_t) ln√|h4|.
    pub w_evolution: f64,
    /// (∂_i − w_i∂_t) ln√|h3| = 0.
    pub h3_transport: f64,
    /// ∂_1 w_2 = ∂_2 w_1.
    pub w_curl: f64,
    /// n_i^◇ = 0.
    pub n_evolution: f64,
    /// ∂_1 n_2 = ∂_2 n_1.
    pub n_curl: f64,
}

impl LcReport {
    pub fn values(&self) -> [(&'static str, f64); 5] {
        [
            ("w_evolution", self.w_evolution),
            ("h3_transport", self.h3_transport),
            ("w_curl", self.w_curl),
            ("n_evolution", self.n_evolution),
            ("n_curl", self.n_curl),
        ]
    }

    pub fn max(&self) -> f64 {
        self.values().iter().map(|v| v.1).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.values().iter().all(|v| v.1 < LC_TOLERANCE)
    }

    fn merge(self, o: Self) -> Self {
        LcReport {
            w_evolution: self.w_evolution.max(o.w_evolution),
            h3_transport: self.h3_transport.max(o.h3_transport),
            w_curl: self.w_curl.max(o.w_curl),
            n_evolution: self.n_evolution.max(o.n_evolution),
            n_curl: self.n_curl.max(o.n_curl),
        }
    }
}

fn lc_at(m: &DMetric, p: [f64; 3]) -> Result<LcReport, FieldError> {
    let om2 = {
        let o = m.omega.jet(p, 1)?;
        o * o
    };
    let lh3 = (om2 * m.h3.jet(p, 1)?).abs().ln().scale(0.5);
    let lh4 = (om2 * m.h4.jet(p, 1)?).abs().ln().scale(0.5);
    let w = [m.w1.jet(p, 1)?, m.w2.jet(p, 1)?];
    let n = [m.n1.jet(p, 1)?, m.n2.jet(p, 1)?];
    let mut r = LcReport::default();
    for i in 0..2 {
        let wv = w[i].value();
        let transport = |f: &Jet| f.derivative(i).value() - wv * f.derivative(2).value();
        r.w_evolution = r.w_evolution.max(rel(w[i].derivative(2).value(), transport(&lh4)));
        r.h3_transport = r.h3_transport.max(transport(&lh3).abs());
        r.n_evolution = r.n_evolution.max(n[i].derivative(2).value().abs());
    }
    r.w_curl = rel(w[1].derivative(0).value(), w[0].derivative(1).value());
    r.n_curl = rel(n[1].derivative(0).value(), n[0].derivative(1).value());
    Ok(r)
}

/// Levi-Civita conditions on the N-connection and v-metric, sup over `points`.
pub fn check_lc(m: &DMetric, points: &[[f64; 3]]) -> Result<LcReport, FieldError> {
    let per = points.par_iter().map(|&p| lc_at(m, p)).collect::<Result<Vec<_>, _>>()?;
    Ok(per.into_iter().fold(LcReport::default(), LcReport::merge))
}

/// Potential Ã with ∂_iÃ = w_i from line integrals at fixed t.
#[derive(Clone, Debug)]
pub struct LinePotential {
    /// Ã on the grid, base point (x1.lo, x2.lo) on every time slice.
    pub values: GridField,
    /// max difference between the x1-first and x2-first paths.
    pub path_discrepancy: f64,
}

/// Integrate w_i along axis-aligned paths from the grid corner.
pub fn line_potential(w: &[Field; 2], grid: &Grid3) -> Result<LinePotential, FieldError> {
    let (a0, b0) = (grid.x1.lo, grid.x2.lo);
    let panel = 0.125;
    let per = (0..grid.len())
        .into_par_iter()
        .map(|idx| -> Result<(f64, f64), FieldError> {
            let [x, y, t] = grid.point(idx);
            let mut err = None;
            let mut line = |f: &Field, from: [f64; 3], axis: usize, a: f64, b: f64| {
                integrate(
                    |s| {
                        let mut q = from;
                        q[axis] = s;
                        f.value(q).unwrap_or_else(|e| {
                            err.get_or_insert(e);
                            f64::NAN
                        })
                    },
                    a,
                    b,
                    panel,
                )
            };
            let first = line(&w[0], [0.0, b0, t], 0, a0, x) + line(&w[1], [x, 0.0, t], 1, b0, y);
            let second = line(&w[1], [a0, 0.0, t], 1, b0, y) + line(&w[0], [0.0, y, t], 0, a0, x);
            if let Some(e) = err {
                return Err(e);
            }
            Ok((first, (first - second).abs()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let path_discrepancy = per.iter().map(|v| v.1).fold(0.0, f64::max);
    let values = GridField { grid: *grid, values: per.into_iter().map(|v| v.0).collect() };
    Ok(LinePotential { values, path_discrepancy })
}

/// Small off-diagonal deformation of the rescaled FLRW metric:
/// a²(dx1² + dx2²) + a²(1 + εχ3)(dy3 + εň_i dx^i)² − (dt + εw̌_i dx^i)²,
/// with a taken from the base solution's scale factor.
pub fn epsilon_family(
    base: &AfdmSolution,
    eps: f64,
    chi3: &Field,
    n_check: &[Field; 2],
    w_check: &[Field; 2],
) -> DMetric {
    let a = &base.provenance.a_factor;
    let a2 = a * a;
    DMetric {
        g1: a2.clone(),
        g2: a2.clone(),
        h3: &a2 * &(1.0 + &(eps * chi3)),
        h4: Field::constant(-1.0),
        n1: eps * &n_check[0],
        n2: eps * &n_check[1],
        w1: eps * &w_check[0],
        w2: eps * &w_check[1],
        omega: Field::constant(1.0),
    }
}
