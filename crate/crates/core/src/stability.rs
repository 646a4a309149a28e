//! Matter-instability diagnostics for constant-interior solutions: the trace
//! background equation, the damped-oscillator criterion, linear perturbation
//! evolution and the non-conservation (divergence) residual.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldkit::{integrate_ivp, Field, FieldError, IvpError, OdeControl, OdeErrorKind, Trajectory};
use crate::nageometry::{contracted_bianchi, DMetric, GeometryError};
use crate::reconstruct::{FModel, Invariants, ReconstructError};

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("F⁽²⁾ = ∂²F/∂P² vanishes")]
    ZeroF2,
    #[error("Ť₀ vanishes")]
    ZeroT0,
    #[error("H is singular at t = {0}")]
    SingularHubble(f64),
    #[error("²f + κ² vanishes at t = {0}")]
    DegeneratePrefactor(f64),
    #[error("the trace residual does not change sign on [{0}, {1}]")]
    NoBracket(f64, f64),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ReconstructError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Constant-interior data: Ξ₀, P̌₀, Ť₀, f̂₁⁽¹⁾ = ∂f̂₁/∂R̂, F̂⁽¹⁾, F̂⁽²⁾ and the matter Lagrangian ᵐL̂.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityInputs {
    pub xi0: f64,
    pub p0: f64,
    pub t0: f64,
    pub f1_1: f64,
    pub f1: f64,
    pub f2: f64,
    pub matter_l: f64,
    pub kappa2: f64,
    /// Replaces the derived δŘ coefficient when set.
    pub source_override: Option<f64>,
}

impl StabilityInputs {
    /// ω² = 2Ξ₀/Ť₀ + 4(P̌₀/Ť₀)(f̂₁⁽¹⁾/F̂⁽²⁾).
    pub fn omega2(&self) -> Result<f64, StabilityError> {
        self.check()?;
        Ok(2.0 * self.xi0 / self.t0 + 4.0 * (self.p0 / self.t0) * (self.f1_1 / self.f2))
    }

    /// S = 2f̂₁⁽¹⁾/(Ť₀F̂⁽²⁾) − (P̌₀/Ť₀)(F̂⁽¹⁾/F̂⁽²⁾)(2ᵐL̂ − Ť₀), or the override.
    pub fn source(&self) -> Result<f64, StabilityError> {
        if let Some(s) = self.source_override {
            return Ok(s);
        }
        self.check()?;
        Ok(2.0 * self.f1_1 / (self.t0 * self.f2)
            - (self.p0 / self.t0) * (self.f1 / self.f2) * (2.0 * self.matter_l - self.t0))
    }

    fn check(&self) -> Result<(), StabilityError> {
        if self.f2 == 0.0 {
            return Err(StabilityError::ZeroF2);
        }
        if self.t0 == 0.0 {
            return Err(StabilityError::ZeroT0);
        }
        Ok(())
    }
}

/// −2f̂ + R̂₀·¹f̂ − κ²Ť₀ at (R̂₀, Ť₀).
pub fn trace_background_residual(m: &FModel, r0: f64, t0: f64, kappa2: f64) -> Result<f64, StabilityError> {
    let v = m.eval(Invariants { r: r0, t: t0, p: 0.0 })?;
    Ok(-2.0 * v.f + r0 * v.f1 - kappa2 * t0)
}

/// Root of [`trace_background_residual`] in R̂₀ by bisection on `bracket`.
pub fn solve_trace_background(m: &FModel, t0: f64, kappa2: f64, bracket: (f64, f64)) -> Result<f64, StabilityError> {
    let res = |r: f64| trace_background_residual(m, r, t0, kappa2);
    let (mut lo, mut hi) = bracket;
    let (mut flo, fhi) = (res(lo)?, res(hi)?);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(StabilityError::NoBracket(lo, hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = res(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub pass: bool,
    pub margin: f64,
}

/// margin = Ξ₀ + 2P̌₀f̂₁⁽¹⁾/F̂⁽²⁾ − Ť₀; pass iff margin ≥ 0.
pub fn oscillator_criterion(s: &StabilityInputs) -> Result<Criterion, StabilityError> {
    if s.f2 == 0.0 {
        return Err(StabilityError::ZeroF2);
    }
    let margin = s.xi0 + 2.0 * s.p0 * s.f1_1 / s.f2 - s.t0;
    Ok(Criterion { pass: margin >= 0.0, margin })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Damped,
    Oscillatory,
    Growing,
}

/// Log-envelope slope above which a perturbation counts as growing (and below minus it, damped).
pub const GROWTH_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationRun {
    /// Columns t, dP, dP_dot.
    pub trajectory: Trajectory,
    pub omega2: f64,
    pub source: f64,
    /// Least-squares slope of ln E over the final third, E² = δP² + δP′²/max(|ω²|, 1e-12).
    pub envelope_slope: f64,
    pub classification: Classification,
}

impl PerturbationRun {
    /// For constant H and ω² > (3H/2)², the exact damped-oscillator envelope
    /// √(δP² + ((δP′ + γδP)/Ω)²) with γ = 3H/2, Ω² = ω² − γ².
    pub fn damped_envelope(&self, h: f64) -> Option<Vec<f64>> {
        let gamma = 1.5 * h;
        let big = self.omega2 - gamma * gamma;
        if !(big > 0.0) {
            return None;
        }
        let om = big.sqrt();
        Some(
            self.trajectory
                .states
                .iter()
                .map(|y| (y[0] * y[0] + ((y[1] + gamma * y[0]) / om).powi(2)).sqrt())
                .collect(),
        )
    }
}

/// Integrates δP̌″ + 3HδP̌′ + ω²δP̌ = S·δŘ on `nodes` (increasing t), with H and
/// the optional δŘ given as fields of t (evaluated at x1 = x2 = 0).
pub fn evolve_perturbation(
    s: &StabilityInputs,
    hubble: &Field,
    delta_r: Option<&Field>,
    ics: (f64, f64),
    nodes: &[f64],
    control: OdeControl,
) -> Result<PerturbationRun, StabilityError> {
    let omega2 = s.omega2()?;
    let source = if delta_r.is_some() { s.source()? } else { s.source().unwrap_or(0.0) };
    let err: Mutex<Option<StabilityError>> = Mutex::new(None);
    let eval = |f: &Field, t: f64| {
        f.value([0.0, 0.0, t]).map_err(StabilityError::from).and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(StabilityError::SingularHubble(t))
            }
        })
    };
    let result = integrate_ivp(
        |t, y, d| {
            let mut forcing = 0.0;
            let h = eval(hubble, t);
            if let Some(dr) = delta_r {
                match eval(dr, t) {
                    Ok(v) => forcing = source * v,
                    Err(e) => {
                        err.lock().unwrap().get_or_insert(e);
                    }
                }
            }
            match h {
                Ok(h) => {
                    d[0] = y[1];
                    d[1] = -3.0 * h * y[1] - omega2 * y[0] + forcing;
                }
                Err(_) => {
                    err.lock().unwrap().get_or_insert(StabilityError::SingularHubble(t));
                    d[0] = f64::NAN;
                    d[1] = f64::NAN;
                }
            }
        },
        &[ics.0, ics.1],
        &["dP", "dP_dot"],
        nodes,
        control,
    );
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    let trajectory = match result {
        Ok(t) => t,
        Err(e) => {
            // a stalled step next to a pole of H is reported as the singularity
            let span = (nodes[nodes.len() - 1] - nodes[0]).abs().max(1.0);
            let near_pole = hubble.value([0.0, 0.0, e.at]).map_or(true, |h| !(h.abs() * span < 1e6));
            let stalled = matches!(e.kind, OdeErrorKind::NonFinite | OdeErrorKind::StepUnderflow { .. });
            return Err(if stalled && near_pole { StabilityError::SingularHubble(e.at) } else { e.into() });
        }
    };
    let envelope_slope = late_log_slope(&trajectory, omega2);
    let classification = if envelope_slope > GROWTH_THRESHOLD {
        Classification::Growing
    } else if envelope_slope < -GROWTH_THRESHOLD {
        Classification::Damped
    } else {
        Classification::Oscillatory
    };
    Ok(PerturbationRun { trajectory, omega2, source, envelope_slope, classification })
}

fn late_log_slope(tr: &Trajectory, omega2: f64) -> f64 {
    let w = omega2.abs().max(1e-12);
    let start = tr.len() - tr.len() / 3;
    let pts: Vec<(f64, f64)> = (start.min(tr.len().saturating_sub(2))..tr.len())
        .filter_map(|i| {
            let y = &tr.states[i];
            let e2 = y[0] * y[0] + y[1] * y[1] / w;
            (e2 > 0.0).then(|| (tr.s[i], 0.5 * e2.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub max: f64,
    /// Per-point residual.
    pub residuals: Vec<f64>,
}

/// Levi-Civita branch: max |∇^μG_{μν}| per point.
pub fn divergence_residual_lc(m: &DMetric, points: &[[f64; 3]]) -> Result<DivergenceReport, StabilityError> {
    let mut residuals = Vec::with_capacity(points.len());
    for &p in points {
        let b = contracted_bianchi(m, p)?;
        residuals.push(b.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok(DivergenceReport { max, residuals })
}

/// Homogeneous perfect fluid on FLRW, all fields of t.
#[derive(Clone, Debug)]
pub struct FlrwFluid {
    pub h: Field,
    pub rho: Field,
    pub p: Field,
}

/// t-component of the divergence identity at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlrwDivergence {
    pub t: f64,
    /// (²f + κ²)∇^μT_{μt}.
    pub lhs: f64,
    /// ²f times the right-hand side.
    pub rhs: f64,
    pub residual: f64,
}

/// Evaluates both sides of
/// (²f + κ²)∇^μT_{μt} = ²f[½∂_tT − (T + Θ)_{μt}∇^μ ln²f − ∇^μΘ_{μt}],  Θ = −2T − pg,
/// multiplied through by ²f. With C = −(ρ̇ + 3H(ρ + p)) this is
/// lhs = (²f + κ²)C and rhs = ²f[½(3ṗ − ρ̇) + 2C + ṗ] − (ρ − p)∂_t²f.
/// The model is evaluated at R = 6(Ḣ + 2H²), T = 3p − ρ and P = −3ρ(H² + Ḣ).
pub fn divergence_residual_flrw(
    fluid: &FlrwFluid,
    m: &FModel,
    kappa2: f64,
    times: &[f64],
) -> Result<Vec<FlrwDivergence>, StabilityError> {
    let f2_at = |t: f64| -> Result<f64, StabilityError> {
        let p = [0.0, 0.0, t];
        let hj = fluid.h.jet(p, 1)?;
        let (h, hd) = (hj.value(), hj.derivative(2).value());
        let rho = fluid.rho.value(p)?;
        let pr = fluid.p.value(p)?;
        let at = Invariants { r: 6.0 * (hd + 2.0 * h * h), t: 3.0 * pr - rho, p: -3.0 * rho * (h * h + hd) };
        Ok(m.eval(at)?.f2)
    };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let p = [0.0, 0.0, t];
        let h = fluid.h.value(p)?;
        if !h.is_finite() {
            return Err(StabilityError::SingularHubble(t));
        }
        let rj = fluid.rho.jet(p, 1)?;
        let pj = fluid.p.jet(p, 1)?;
        let (rho, rho_dot) = (rj.value(), rj.derivative(2).value());
        let (pr, p_dot) = (pj.value(), pj.derivative(2).value());
        let f2 = f2_at(t)?;
        if f2 + kappa2 == 0.0 {
            return Err(StabilityError::DegeneratePrefactor(t));
        }
        let step = 1e-4 * t.abs().max(1.0);
        let f2_dot = (f2_at(t - 2.0 * step)? - 8.0 * f2_at(t - step)? + 8.0 * f2_at(t + step)?
            - f2_at(t + 2.0 * step)?)
            / (12.0 * step);
        let c = -(rho_dot + 3.0 * h * (rho + pr));
        let lhs = (f2 + kappa2) * c;
        let rhs = f2 * (0.5 * (3.0 * p_dot - rho_dot) + 2.0 * c + p_dot) - (rho - pr) * f2_dot;
        out.push(FlrwDivergence { t, lhs, rhs, residual: (lhs - rhs).abs() });
    }
    Ok(out)
}
