//! f-model reconstruction: effective sources, the ΛCDM hypergeometric
//! equation, the Euler and Y-equations for power-law fluids, and the
//! residual of the first FLRW equation written in the e-folding variable.

mod fgt;

pub use fgt::{
    ceq_residual, compare_fgt_exponents, derived_fgt_exponents, ds_characteristic_cubic, fgt_ceq_inputs,
    fgt_derivative, fgt_eval, printed_fgt_exponents, CeqInputs, FgtBranch, FgtModel, FgtRootComparison, RootChoice,
    PRINTED_B,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldkit::{integrate_ivp, parse_expression, Field, FieldError, IvpError, OdeControl, XT_VARS};

/// Below this magnitude ¹f̂ or a leading ODE coefficient counts as zero.
pub const VANISHING: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("∂f/∂R vanishes at R = {0}")]
    ZeroFirstDerivative(f64),
    #[error("{0} is outside the domain of the evaluator")]
    Domain(String),
    #[error("the interval [{from}, {to}] touches the singular point {point}")]
    SingularCrossing { from: f64, to: f64, point: f64 },
    #[error("R(ζ) is not monotone at ζ = {0}")]
    NonMonotone(f64),
    #[error("H vanishes at z = {0}")]
    ZeroHubble(f64),
    #[error("w = −1 has no inverse-convention H0")]
    PhantomDivide,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Curvature and matter invariants at which an f-model is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub r: f64,
    pub t: f64,
    pub p: f64,
}

impl Invariants {
    pub fn curvature(r: f64) -> Self {
        Invariants { r, t: 0.0, p: 0.0 }
    }
}

/// f̂ and its partial derivatives ¹f̂ = ∂f/∂R, ²f̂ = ∂f/∂T, ³f̂ = ∂f/∂P, ∂²f/∂R².
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FValues {
    pub f: f64,
    pub f1: f64,
    pub f11: f64,
    pub f2: f64,
    pub f3: f64,
}

/// Variable in which a tabulated or hypergeometric model is written.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Variable {
    R,
    /// X = −3 + R/(3H₀²).
    X {
        h0: f64,
    },
    /// R² = −576 q_s q_p Y, on the branch R > 0.
    Y {
        q_s: f64,
        q_p: f64,
    },
}

impl Variable {
    pub fn from_r(&self, r: f64) -> f64 {
        match *self {
            Variable::R => r,
            Variable::X { h0 } => r / (3.0 * h0 * h0) - 3.0,
            Variable::Y { q_s, q_p } => -r * r / (576.0 * q_s * q_p),
        }
    }

    /// (R, dR/ds, d²R/ds²) at s.
    pub fn to_r(&self, s: f64) -> Result<(f64, f64, f64), ReconstructError> {
        Ok(match *self {
            Variable::R => (s, 1.0, 0.0),
            Variable::X { h0 } => (3.0 * h0 * h0 * (s + 3.0), 3.0 * h0 * h0, 0.0),
            Variable::Y { q_s, q_p } => {
                let k = -576.0 * q_s * q_p;
                if !(k * s > 0.0) {
                    return Err(ReconstructError::Domain(format!("Y = {s} gives no real R")));
                }
                let r = (k * s).sqrt();
                (r, k / (2.0 * r), -k * k / (4.0 * r * r * r))
            }
        })
    }

    /// Convert (f, f_s, f_ss) to (f, f_R, f_RR).
    fn chain(&self, s: f64, d: (f64, f64, f64)) -> Result<(f64, f64, f64), ReconstructError> {
        let (_, rs, rss) = self.to_r(s)?;
        let fr = d.1 / rs;
        Ok((d.0, fr, (d.2 - fr * rss) / (rs * rs)))
    }
}

/// Second-order linear ODE p2(s) f'' + p1(s) f' + p0(s) f = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OdeKind {
    /// X(1−X)f'' + [χ3 − (χ1+χ2+1)X]f' − χ1χ2 f = 0.
    Gauss { chi: [f64; 3] },
    /// 4Y(1−Y)f'' + (3+Y)f' − 2f = 0.
    YEquation,
    /// R²f'' + ARf' + Bf = 0.
    Euler { a: f64, b: f64 },
    /// Coefficients as expressions in `t`, standing for the ODE variable.
    Custom { p2: String, p1: String, p0: String },
}

impl OdeKind {
    pub fn coefficients(&self, s: f64) -> Result<[f64; 3], ReconstructError> {
        Ok(match self {
            OdeKind::Gauss { chi } => [s * (1.0 - s), chi[2] - (chi[0] + chi[1] + 1.0) * s, -chi[0] * chi[1]],
            OdeKind::YEquation => [4.0 * s * (1.0 - s), 3.0 + s, -2.0],
            OdeKind::Euler { a, b } => [s * s, a * s, *b],
            OdeKind::Custom { p2, p1, p0 } => {
                let mut out = [0.0; 3];
                for (o, text) in out.iter_mut().zip([p2, p1, p0]) {
                    let e = parse_expression(text, &XT_VARS)
                        .map_err(|e| ReconstructError::Invalid(format!("coefficient `{text}`: {e}")))?;
                    *o = Field::expr(e).value([0.0, 0.0, s])?;
                }
                out
            }
        })
    }

    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            OdeKind::Gauss { .. } | OdeKind::YEquation => vec![0.0, 1.0],
            OdeKind::Euler { .. } => vec![0.0],
            OdeKind::Custom { .. } => Vec::new(),
        }
    }

    fn second(&self, s: f64, f: f64, df: f64) -> Result<f64, ReconstructError> {
        let [p2, p1, p0] = self.coefficients(s)?;
        if p2.abs() < VANISHING {
            return Err(ReconstructError::SingularCrossing { from: s, to: s, point: s });
        }
        Ok(-(p1 * df + p0 * f) / p2)
    }
}

/// Samples of an ODE-propagated solution (f, f') over a variable s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub kind: OdeKind,
    pub variable: Variable,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
}

fn ode_control() -> OdeControl {
    OdeControl::with_tolerance(1e-12, 1e-14)
}

impl Tabulated {
    /// (f, f', f'') at s, propagated from the nearest sample.
    pub fn eval(&self, s: f64) -> Result<(f64, f64, f64), ReconstructError> {
        let (lo, hi) = (self.s[0].min(*self.s.last().unwrap()), self.s[0].max(*self.s.last().unwrap()));
        let slack = 1e-12 * (hi - lo).max(1.0);
        if s < lo - slack || s > hi + slack {
            return Err(ReconstructError::Domain(format!("s = {s} outside the table [{lo}, {hi}]")));
        }
        self.propagate(s)
    }

    fn propagate(&self, s: f64) -> Result<(f64, f64, f64), ReconstructError> {
        let i =
            self.s.iter().enumerate().min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs())).map(|v| v.0).unwrap();
        let (mut f, mut df) = (self.f[i], self.df[i]);
        if self.s[i] != s {
            let kind = self.kind.clone();
            let err = std::sync::Mutex::new(None);
            let tr = integrate_ivp(
                |x, y, d| {
                    d[0] = y[1];
                    d[1] = kind.second(x, y[0], y[1]).unwrap_or_else(|e| {
                        err.lock().unwrap().get_or_insert(e);
                        f64::NAN
                    });
                },
                &[f, df],
                &["f", "df"],
                &[self.s[i], s],
                ode_control(),
            );
            if let Some(e) = err.into_inner().unwrap() {
                return Err(e);
            }
            let last = tr?.states.pop().unwrap();
            f = last[0];
            df = last[1];
        }
        Ok((f, df, self.kind.second(s, f, df)?))
    }

    /// Normalised ODE residual with f'' from a five-point stencil of the
    /// propagated f', independent of the ODE relation used in `eval`.
    pub fn ode_residual(&self, s: f64) -> Result<f64, ReconstructError> {
        let h = 1e-3 * s.abs().max(1.0) * self.step_scale();
        let d = |k: f64| self.propagate(s + k * h).map(|v| v.1);
        let ddf = (d(-2.0)? - 8.0 * d(-1.0)? + 8.0 * d(1.0)? - d(2.0)?) / (12.0 * h);
        let (f, df, _) = self.propagate(s)?;
        let [p2, p1, p0] = self.kind.coefficients(s)?;
        let terms = [p2 * ddf, p1 * df, p0 * f];
        let scale = terms.iter().fold(1f64, |m, v| m.max(v.abs()));
        Ok(terms.iter().sum::<f64>().abs() / scale)
    }

    fn step_scale(&self) -> f64 {
        let span = (self.s.last().unwrap() - self.s[0]).abs();
        (span / 10.0).clamp(1e-3, 1.0)
    }

    /// (f, f_R, f_RR) at curvature R.
    pub fn eval_r(&self, r: f64) -> Result<(f64, f64, f64), ReconstructError> {
        let s = self.variable.from_r(r);
        self.variable.chain(s, self.eval(s)?)
    }
}

/// Integrate the ODE from s0 with (f, f') = ics to s_end, sampling `samples` nodes.
pub fn solve_linear_ode2(
    kind: OdeKind,
    variable: Variable,
    s0: f64,
    ics: (f64, f64),
    s_end: f64,
    samples: usize,
) -> Result<Tabulated, ReconstructError> {
    if samples < 2 || s0 == s_end {
        return Err(ReconstructError::Invalid("needs two samples on a non-empty range".into()));
    }
    let (lo, hi) = (s0.min(s_end), s0.max(s_end));
    for p in kind.singular_points() {
        if p >= lo && p <= hi {
            return Err(ReconstructError::SingularCrossing { from: s0, to: s_end, point: p });
        }
    }
    let nodes: Vec<f64> = (0..samples).map(|i| s0 + (s_end - s0) * i as f64 / (samples - 1) as f64).collect();
    // leading coefficient must keep its sign (custom kinds are checked here)
    let first = kind.coefficients(s0)?[0];
    for &s in &nodes {
        let p2 = kind.coefficients(s)?[0];
        if p2.abs() < VANISHING || p2.signum() != first.signum() {
            return Err(ReconstructError::SingularCrossing { from: s0, to: s_end, point: s });
        }
    }
    let err = std::sync::Mutex::new(None);
    let tr = integrate_ivp(
        |x, y, d| {
            d[0] = y[1];
            d[1] = kind.second(x, y[0], y[1]).unwrap_or_else(|e| {
                err.lock().unwrap().get_or_insert(e);
                f64::NAN
            });
        },
        &[ics.0, ics.1],
        &["f", "df"],
        &nodes,
        ode_control(),
    );
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    let tr = tr?;
    Ok(Tabulated {
        kind,
        variable,
        f: tr.states.iter().map(|v| v[0]).collect(),
        df: tr.states.iter().map(|v| v[1]).collect(),
        s: tr.s,
    })
}

/// Gauss hypergeometric series ₂F₁(a, b; c; x) for |x| < 1.
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64, ReconstructError> {
    if !(x.abs() < 1.0) {
        return Err(ReconstructError::Domain(format!("x = {x}: the series needs |x| < 1, propagate the ODE instead")));
    }
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(ReconstructError::Domain(format!("c = {c} is a non-positive integer")));
    }
    let (mut sum, mut term) = (1.0f64, 1.0f64);
    let mut small = 0;
    for n in 0..200_000 {
        let k = n as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() < 1e-16 * sum.abs() {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(ReconstructError::Domain(format!("series did not converge at x = {x}")))
}

/// (F, F', F'') of ₂F₁(a, b; c; x).
pub fn hyp2f1_derivatives(a: f64, b: f64, c: f64, x: f64) -> Result<(f64, f64, f64), ReconstructError> {
    let f = hyp2f1(a, b, c, x)?;
    let d1 = a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, x)?;
    let d2 = a * b * (a + 1.0) * (b + 1.0) / (c * (c + 1.0)) * hyp2f1(a + 2.0, b + 2.0, c + 2.0, x)?;
    Ok((f, d1, d2))
}

/// (χ1, χ2, χ3) as printed for the ΛCDM equation.
pub fn chi_constants() -> (f64, f64, f64) {
    (1.0 / 3.0, -0.5, -0.5)
}

/// (χ1, χ2, χ3) of the Gauss form of the f1gen equation for ΛCDM q without
/// a matter term: χ1 + χ2 = −7/6, χ1χ2 = −1/6, χ3 = −1/2.
pub fn lcdm_chi_constants() -> (f64, f64, f64) {
    let d = 73f64.sqrt();
    ((-7.0 + d) / 12.0, (-7.0 - d) / 12.0, -0.5)
}

/// Indicial roots of m² + (A − 1)m + B = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IndicialRoots {
    Real { plus: f64, minus: f64 },
    Complex { re: f64, im: f64 },
}

/// a(t) = a0 (t_s − t)^{−H0} and H = H0/(t_s − t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipScale {
    pub h0: f64,
    pub a0: f64,
    pub t_s: f64,
}

impl RipScale {
    pub fn hubble(&self, t: f64) -> f64 {
        self.h0 / (self.t_s - t)
    }

    pub fn scale(&self, t: f64) -> f64 {
        self.a0 * (self.t_s - t).powf(-self.h0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum H0Convention {
    /// H0 = 1/(3(1 + w)).
    Inverse,
    /// H0 = (1 + w)/3.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EulerReconstruction {
    pub w_ph: f64,
    pub convention: H0Convention,
    pub h0: f64,
    pub a: f64,
    pub b: f64,
    pub roots: IndicialRoots,
    /// C₊R^{m₊} + C₋R^{m₋} with unit constants, for real roots.
    pub model: Option<FModel>,
    /// With a0 = 1 and t_s = 1.
    pub rip: RipScale,
}

pub fn indicial_residual(a: f64, b: f64, m: f64) -> f64 {
    m * m + (a - 1.0) * m + b
}

/// A = −H0(1 + H0), B = (1 + 2H0)/2, 2m± = 1 − A ± √((1 − A)² − 4B).
pub fn euler_reconstruct(w_ph: f64, convention: H0Convention) -> Result<EulerReconstruction, ReconstructError> {
    let h0 = match convention {
        H0Convention::Inverse => {
            if w_ph == -1.0 {
                return Err(ReconstructError::PhantomDivide);
            }
            1.0 / (3.0 * (1.0 + w_ph))
        }
        H0Convention::Linear => (1.0 + w_ph) / 3.0,
    };
    let a = -h0 * (1.0 + h0);
    let b = (1.0 + 2.0 * h0) / 2.0;
    let disc = (1.0 - a) * (1.0 - a) - 4.0 * b;
    let (roots, model) = if disc >= 0.0 {
        let (plus, minus) = ((1.0 - a + disc.sqrt()) / 2.0, (1.0 - a - disc.sqrt()) / 2.0);
        let model = FModel::PowerLaw { c_plus: 1.0, c_minus: 1.0, m_plus: plus, m_minus: minus };
        (IndicialRoots::Real { plus, minus }, Some(model))
    } else {
        (IndicialRoots::Complex { re: (1.0 - a) / 2.0, im: (-disc).sqrt() / 2.0 }, None)
    };
    Ok(EulerReconstruction { w_ph, convention, h0, a, b, roots, model, rip: RipScale { h0, a0: 1.0, t_s: 1.0 } })
}

/// R² = −576 q_s q_p Y.
pub fn y_of_rhat(rhat: f64, q_s: f64, q_p: f64) -> f64 {
    Variable::Y { q_s, q_p }.from_r(rhat)
}

/// An f-model with evaluators for f̂ and its partial derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum FModel {
    /// C₊R^{m₊} + C₋R^{m₋}.
    PowerLaw {
        c_plus: f64,
        c_minus: f64,
        m_plus: f64,
        m_minus: f64,
    },
    /// A·F(χ1, χ2; χ3; X) + B·X^{1−χ3}F(χ1−χ3+1, χ2−χ3+1; 2−χ3; X) with
    /// X = −3 + R/(3H0²), for |X| < 1.
    GaussSolution {
        a: f64,
        b: f64,
        chi: [f64; 3],
        h0: f64,
    },
    /// R + F(P) + G(T).
    Fgt(FgtModel),
    Tabulated(Tabulated),
}

fn power_term(c: f64, m: f64, r: f64) -> Result<(f64, f64, f64), ReconstructError> {
    if c == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    if m.fract() == 0.0 && m.abs() < 64.0 {
        let n = m as i32;
        if n == 0 {
            return Ok((c, 0.0, 0.0));
        }
        if r == 0.0 && n < 0 {
            return Err(ReconstructError::Domain(format!("R = 0 with exponent {m}")));
        }
        let p = |k: i32| if n - k == 0 { 1.0 } else { r.powi(n - k) };
        let nf = n as f64;
        return Ok((c * p(0), c * nf * p(1), c * nf * (nf - 1.0) * p(2)));
    }
    if !(r > 0.0) {
        return Err(ReconstructError::Domain(format!("R = {r} with non-integer exponent {m}")));
    }
    Ok((c * r.powf(m), c * m * r.powf(m - 1.0), c * m * (m - 1.0) * r.powf(m - 2.0)))
}

impl FModel {
    pub fn eval(&self, at: Invariants) -> Result<FValues, ReconstructError> {
        match self {
            FModel::PowerLaw { c_plus, c_minus, m_plus, m_minus } => {
                let a = power_term(*c_plus, *m_plus, at.r)?;
                let b = power_term(*c_minus, *m_minus, at.r)?;
                Ok(FValues { f: a.0 + b.0, f1: a.1 + b.1, f11: a.2 + b.2, f2: 0.0, f3: 0.0 })
            }
            FModel::GaussSolution { a, b, chi, h0 } => {
                let v = Variable::X { h0: *h0 };
                let x = v.from_r(at.r);
                let (f, df, ddf) = gauss_solution(*a, *b, *chi, x)?;
                let (f, f1, f11) = v.chain(x, (f, df, ddf))?;
                Ok(FValues { f, f1, f11, f2: 0.0, f3: 0.0 })
            }
            FModel::Fgt(m) => m.eval(at),
            FModel::Tabulated(t) => {
                let (f, f1, f11) = t.eval_r(at.r)?;
                Ok(FValues { f, f1, f11, f2: 0.0, f3: 0.0 })
            }
        }
    }
}

/// (f, f_X, f_XX) of the two-branch hypergeometric solution.
pub fn gauss_solution(a: f64, b: f64, chi: [f64; 3], x: f64) -> Result<(f64, f64, f64), ReconstructError> {
    let [c1, c2, c3] = chi;
    let first = hyp2f1_derivatives(c1, c2, c3, x)?;
    let mut out = (a * first.0, a * first.1, a * first.2);
    if b != 0.0 {
        if !(x > 0.0) {
            return Err(ReconstructError::Domain(format!("X = {x}: X^(1−χ3) needs X > 0")));
        }
        let e = 1.0 - c3;
        let g = hyp2f1_derivatives(c1 - c3 + 1.0, c2 - c3 + 1.0, 2.0 - c3, x)?;
        let p = x.powf(e);
        out.0 += b * p * g.0;
        out.1 += b * (e * p / x * g.0 + p * g.1);
        out.2 += b * (e * (e - 1.0) * p / (x * x) * g.0 + 2.0 * e * p / x * g.1 + p * g.2);
    }
    Ok(out)
}

/// Λ, pressure and coupling entering the effective source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub lambda: f64,
    pub p: f64,
    pub kappa2: f64,
}

/// Υ̂ = Λ/¹f + f/(2¹f) + (2Λ − κ⁻²Λ − p)²f/¹f + pΛ³f/¹f.
pub fn effective_source(m: &FModel, s: &SourceSpec, at: Invariants) -> Result<f64, ReconstructError> {
    if !(s.kappa2 > 0.0) {
        return Err(ReconstructError::Invalid("κ² must be positive".into()));
    }
    let v = m.eval(at)?;
    if v.f1.abs() < VANISHING {
        return Err(ReconstructError::ZeroFirstDerivative(at.r));
    }
    let l = s.lambda;
    Ok(l / v.f1 + v.f / (2.0 * v.f1) + (2.0 * l - l / s.kappa2 - s.p) * v.f2 / v.f1 + s.p * l * v.f3 / v.f1)
}

/// Υ̂ = Λ/¹f + f/(2¹f) for f = f(R).
pub fn effective_source_fr(m: &FModel, lambda: f64, r: f64) -> Result<f64, ReconstructError> {
    let v = m.eval(Invariants::curvature(r))?;
    if v.f1.abs() < VANISHING {
        return Err(ReconstructError::ZeroFirstDerivative(r));
    }
    Ok(lambda / v.f1 + v.f / (2.0 * v.f1))
}

/// Matter data of the f1gen equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1genMatter {
    pub rho0: f64,
    pub varpi: f64,
    pub a0: f64,
    pub kappa2: f64,
}

impl F1genMatter {
    pub fn none() -> Self {
        F1genMatter { rho0: 0.0, varpi: 0.0, a0: 1.0, kappa2: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct F1genPoint {
    pub zeta: f64,
    pub rhat: f64,
    pub f: f64,
    pub residual: f64,
}

/// Residual of f = −18q(q'' + 4q')f_RR + 6(q + q'/2)f_R + 2κ²ρ0 a0^{−3(1+ϖ)}e^{−3(1+ϖ)ζ}
/// at ζ, with q(ζ) a field in `t` and R = 3q' + 12q; normalised by
/// max(1, |lhs|, |rhs|).
pub fn f1gen_residual(m: &FModel, q: &Field, matter: &F1genMatter, zeta: f64) -> Result<F1genPoint, ReconstructError> {
    let j = q.jet([0.0, 0.0, zeta], 2)?;
    let q0 = j.value();
    let q1 = j.derivative(2).value();
    let q2 = j.derivative(2).derivative(2).value();
    let rhat = 3.0 * q1 + 12.0 * q0;
    if (3.0 * q2 + 12.0 * q1).abs() < VANISHING {
        return Err(ReconstructError::NonMonotone(zeta));
    }
    let v = m.eval(Invariants::curvature(rhat))?;
    let w = 1.0 + matter.varpi;
    let source = 2.0 * matter.kappa2 * matter.rho0 * matter.a0.powf(-3.0 * w) * (-3.0 * w * zeta).exp();
    let rhs = -18.0 * q0 * (q2 + 4.0 * q1) * v.f11 + 6.0 * (q0 + 0.5 * q1) * v.f1 + source;
    let residual = (v.f - rhs).abs() / 1f64.max(v.f.abs()).max(rhs.abs());
    Ok(F1genPoint { zeta, rhat, f: v.f, residual })
}

/// f1gen residuals over ζ samples; R(ζ) must be strictly monotone on them.
pub fn f1gen_scan(
    m: &FModel,
    q: &Field,
    matter: &F1genMatter,
    zetas: &[f64],
) -> Result<Vec<F1genPoint>, ReconstructError> {
    let pts = zetas.iter().map(|&z| f1gen_residual(m, q, matter, z)).collect::<Result<Vec<_>, _>>()?;
    for (w, z) in pts.windows(3).zip(zetas) {
        if (w[1].rhat - w[0].rhat).signum() != (w[2].rhat - w[1].rhat).signum() {
            return Err(ReconstructError::NonMonotone(*z));
        }
    }
    Ok(pts)
}

/// q(ζ) = H0² + (κ²/3)ρ0 a0⁻³ e^{−3ζ} as a field in `t`.
pub fn lcdm_q_field(s: &crate::cosmodyn::LcdmSpec) -> Field {
    let z = Field::coordinate(2);
    s.h0 * s.h0 + &((s.kappa2 / 3.0 * s.rho0 * s.a0.powi(-3)) * &(-3.0 * &z).exp())
}

/// ΛCDM model propagated over ζ ∈ [zeta_lo, zeta_hi] in X = 1 + ξa0⁻³e^{−3ζ} > 1,
/// started from the real branch −(X − 1)^{−1/3} of (1 − X)^{−1/3} at the
/// large-X end.
pub fn lcdm_model(
    s: &crate::cosmodyn::LcdmSpec,
    chi: (f64, f64, f64),
    zeta_lo: f64,
    zeta_hi: f64,
    samples: usize,
) -> Result<FModel, ReconstructError> {
    let xi = s.xi() * s.a0.powi(-3);
    if !(xi > 0.0) {
        return Err(ReconstructError::Invalid("ΛCDM reconstruction needs ξ > 0".into()));
    }
    let x_hi = 1.0 + xi * (-3.0 * zeta_lo).exp();
    let x_lo = 1.0 + xi * (-3.0 * zeta_hi).exp();
    let u = x_hi - 1.0;
    let ics = (-u.powf(-1.0 / 3.0), u.powf(-4.0 / 3.0) / 3.0);
    let tab = solve_linear_ode2(
        OdeKind::Gauss { chi: [chi.0, chi.1, chi.2] },
        Variable::X { h0: s.h0 },
        x_hi,
        ics,
        x_lo,
        samples,
    )?;
    Ok(FModel::Tabulated(tab))
}
