//! Background cosmology: Big Rip law, coupled dark energy / dark matter,
//! effective FLRW residuals, e-folding maps for ΛCDM and the power-law
//! curvature inversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldkit::{integrate_ivp, IvpError, OdeControl, OdeErrorKind, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CosmoError {
    #[error("t = t_s is the Big Rip singularity")]
    Singularity,
    #[error("invalid parameter: {0}")]
    Invalid(&'static str),
    #[error("negative discriminant {0:e}: no real e-folding for this curvature")]
    NegativeDiscriminant(f64),
    #[error("no positive root for e^(cζ)")]
    NoPhysicalRoot,
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// H = 2 / (3(1 + ϖ)(t_s − t)).
pub fn big_rip_hubble(varpi: f64, t_s: f64, t: f64) -> Result<f64, CosmoError> {
    if !(varpi < -1.0) {
        return Err(CosmoError::Invalid("phantom equation of state needs ϖ < −1"));
    }
    if t == t_s {
        return Err(CosmoError::Singularity);
    }
    Ok(2.0 / (3.0 * (1.0 + varpi) * (t_s - t)))
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Divergence exponent of an uncoupled phantom fluid.
#[derive(Clone, Debug, Serialize)]
pub struct BigRipFit {
    pub t_s: f64,
    /// Slope of ln|H| against ln(t_s − t) over the sampled approach.
    pub exponent: f64,
    /// max |H (t_s − t) − 2/(3|1+ϖ|)| relative over the samples.
    pub law_residual: f64,
}

/// Integrate 3H²/κ² = ρ, ρ^◇ + 3H(1+ϖ)ρ = 0 from H(0) = h0 towards the Rip
/// and fit the divergence exponent of H in (t_s − t).
pub fn big_rip_fit(varpi: f64, h0: f64) -> Result<BigRipFit, CosmoError> {
    if !(varpi < -1.0) || !(h0 > 0.0) {
        return Err(CosmoError::Invalid("needs ϖ < −1 and H0 > 0"));
    }
    let t_s = -2.0 / (3.0 * (1.0 + varpi) * h0);
    // sample at t_s − t = t_s·10^{−k/4}, k = 0..16
    let gaps: Vec<f64> = (0..=16).map(|k| t_s * 10f64.powf(-(k as f64) / 4.0)).collect();
    let nodes: Vec<f64> = gaps.iter().map(|g| t_s - g).collect();
    // ln H as the state keeps the growth tame
    let traj = integrate_ivp(
        |_, y, d| d[0] = -1.5 * (1.0 + varpi) * y[0].exp(),
        &[h0.ln()],
        &["lnH"],
        &nodes,
        OdeControl::with_tolerance(1e-12, 1e-14),
    )?;
    let h: Vec<f64> = traj.states.iter().map(|s| s[0].exp()).collect();
    let tail = gaps.len() / 2;
    let exponent = loglog_slope(&gaps[tail..], &h[tail..]);
    let c = 2.0 / (3.0 * (1.0 + varpi).abs());
    let law_residual = h.iter().zip(&gaps).map(|(hv, g)| (hv * g - c).abs() / c).fold(0.0, f64::max);
    Ok(BigRipFit { t_s, exponent, law_residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CouplingSource {
    /// ρ_DM^◇ + 3Hρ_DM = +Qρ_DE (energy exchange, total density conserved).
    Exchange,
    /// ρ_DM^◇ + 3Hρ_DM = +Qρ_DM as printed.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidSpec {
    pub varpi: f64,
    pub q: f64,
    pub rho0_de: f64,
    pub rho0_dm: f64,
    pub kappa2: f64,
    pub source: CouplingSource,
}

impl FluidSpec {
    pub fn new(varpi: f64, q: f64, rho0_de: f64, rho0_dm: f64, kappa2: f64) -> Self {
        FluidSpec { varpi, q, rho0_de, rho0_dm, kappa2, source: CouplingSource::Exchange }
    }

    /// H* = −Q / (3(1 + ϖ)).
    pub fn fixed_point_hubble(&self) -> f64 {
        -self.q / (3.0 * (1.0 + self.varpi))
    }

    /// Fixed point (ρ_DE, ρ_DM) of the exchange system with the Friedmann closure.
    pub fn fixed_point_densities(&self) -> (f64, f64) {
        let h = self.fixed_point_hubble();
        let de = 3.0 * h * h / (-self.varpi * self.kappa2);
        (de, -(1.0 + self.varpi) * de)
    }

    fn validate(&self) -> Result<(), CosmoError> {
        if !(self.kappa2 > 0.0) {
            return Err(CosmoError::Invalid("κ² must be positive"));
        }
        if !(self.rho0_de > 0.0) || !(self.rho0_dm > 0.0) {
            return Err(CosmoError::Invalid("initial densities must be positive"));
        }
        Ok(())
    }

    /// Conservation-law residuals at a state (H, ρ_DE, ρ_DM) with given rates.
    pub fn conservation_residuals(&self, h: f64, de: f64, dm: f64, dde: f64, ddm: f64) -> (f64, f64) {
        let dm_source = match self.source {
            CouplingSource::Exchange => self.q * de,
            CouplingSource::Printed => self.q * dm,
        };
        (dde + 3.0 * h * (1.0 + self.varpi) * de + self.q * de, ddm + 3.0 * h * dm - dm_source)
    }

    fn rates(&self, de: f64, dm: f64) -> (f64, f64, f64) {
        let h = (self.kappa2 * (de + dm) / 3.0).max(0.0).sqrt();
        let dde = -(3.0 * h * (1.0 + self.varpi) + self.q) * de;
        let ddm = -3.0 * h * dm
            + match self.source {
                CouplingSource::Exchange => self.q * de,
                CouplingSource::Printed => self.q * dm,
            };
        (h, dde, ddm)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractorReport {
    /// Relative std of H and ρ_DM/ρ_DE over the last 10 % were both < 1e-3.
    pub converged: bool,
    pub final_hubble: f64,
    pub expected_hubble: f64,
    pub final_ratio: f64,
    /// The printed relation ρ_DM = (1 + ϖ)ρ_DE.
    pub printed_ratio: f64,
    /// Fixed point of the exchange system, −(1 + ϖ).
    pub fixed_point_ratio: f64,
    pub relative_std_hubble: f64,
    pub relative_std_ratio: f64,
    /// Integrator stop (Big Rip, H → 0 collapse …), if any.
    pub singular: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DedmRun {
    /// Columns a, H, rho_DE, rho_DM, residual1, residual2 against t.
    pub trajectory: Trajectory,
    pub report: AttractorReport,
}

/// Column names of the background trajectory CSV.
pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t_or_zeta", "a", "H", "rho_DE", "rho_DM", "residual1", "residual2"];

fn relative_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    var.sqrt() / m.abs().max(f64::MIN_POSITIVE)
}

/// Integrate the coupled system from t = span.0 to span.1 with `samples`
/// output nodes. residual1 is the integrated book-keeping identity
/// ln(ρ_DE/ρ_DE0) + 3(1+ϖ) ln(a/a0) + Q(t − t0); residual2 is the second
/// Friedmann equation −(2H^◇ + 3H²)/κ² − ϖρ_DE.
pub fn evolve_coupled_dedm(f: &FluidSpec, a0: f64, span: (f64, f64), samples: usize) -> Result<DedmRun, CosmoError> {
    f.validate()?;
    if samples < 2 || !(span.1 > span.0) {
        return Err(CosmoError::Invalid("needs at least two samples on an increasing span"));
    }
    let nodes: Vec<f64> = (0..samples).map(|i| span.0 + (span.1 - span.0) * i as f64 / (samples - 1) as f64).collect();
    let spec = *f;
    let control = OdeControl { max_norm: Some(1e12), ..OdeControl::default() };
    let (raw, singular) = match integrate_ivp(
        move |_, y, d| {
            // y = (ln a, ln ρ_DE, ρ_DM)
            let de = y[1].exp();
            let (h, dde, ddm) = spec.rates(de, y[2]);
            d[0] = h;
            d[1] = dde / de;
            d[2] = ddm;
        },
        &[a0.ln(), f.rho0_de.ln(), f.rho0_dm],
        &["lna", "lnrho_DE", "rho_DM"],
        &nodes,
        control,
    ) {
        Ok(t) => (t, None),
        Err(e) => {
            let msg = e.to_string();
            (e.partial, Some(msg))
        }
    };
    let mut states = Vec::with_capacity(raw.len());
    for (t, y) in raw.s.iter().zip(&raw.states) {
        let (a, de, dm) = (y[0].exp(), y[1].exp(), y[2]);
        let (h, dde, ddm) = f.rates(de, dm);
        let r1 = (y[1] - f.rho0_de.ln()) + 3.0 * (1.0 + f.varpi) * (y[0] - a0.ln()) + f.q * (t - span.0);
        let dh = f.kappa2 * (dde + ddm) / (6.0 * h);
        let r2 = -(2.0 * dh + 3.0 * h * h) / f.kappa2 - f.varpi * de;
        states.push(vec![a, h, de, dm, r1, r2]);
    }
    if states.len() < 2 {
        return Err(CosmoError::Invalid("integration stopped before the second sample"));
    }
    let names = TRAJECTORY_COLUMNS[1..].iter().map(|s| s.to_string()).collect();
    let trajectory = Trajectory { names, s: raw.s.clone(), states };
    let tail = (trajectory.len() / 10).max(2).min(trajectory.len());
    let last = &trajectory.states[trajectory.len() - tail..];
    let hs: Vec<f64> = last.iter().map(|s| s[1]).collect();
    let ratios: Vec<f64> = last.iter().map(|s| s[3] / s[2]).collect();
    let relative_std_hubble = relative_std(&hs);
    let relative_std_ratio = relative_std(&ratios);
    let report = AttractorReport {
        converged: singular.is_none() && relative_std_hubble < 1e-3 && relative_std_ratio < 1e-3,
        final_hubble: *hs.last().unwrap(),
        expected_hubble: f.fixed_point_hubble(),
        final_ratio: *ratios.last().unwrap(),
        printed_ratio: 1.0 + f.varpi,
        fixed_point_ratio: -(1.0 + f.varpi),
        relative_std_hubble,
        relative_std_ratio,
        singular,
    };
    Ok(DedmRun { trajectory, report })
}

/// Jacobian of (ρ_DE, ρ_DM)^◇ for the exchange system at a state.
pub fn dedm_jacobian(f: &FluidSpec, de: f64, dm: f64) -> [[f64; 2]; 2] {
    let h = (f.kappa2 * (de + dm) / 3.0).sqrt();
    let dh = f.kappa2 / (6.0 * h);
    [
        [-(3.0 * h * (1.0 + f.varpi) + f.q) - 3.0 * (1.0 + f.varpi) * de * dh, -3.0 * (1.0 + f.varpi) * de * dh],
        [-3.0 * dm * dh + f.q, -3.0 * h - 3.0 * dm * dh],
    ]
}

/// Residuals of 3H² = κ²ρ_m + Λ̌ and 2H^◇ = −κ²(ρ_m + P_m) − (1 + ϖ̌)Λ̌.
#[derive(Clone, Debug, Serialize)]
pub struct FlrwResiduals {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub max_first: f64,
    pub max_second: f64,
}

/// Evaluate the effective FLRW equations along a trajectory with columns
/// `a` and `H`; H^◇ by second-order non-uniform differences.
pub fn effective_flrw_residual(
    traj: &Trajectory,
    rho_m: &dyn Fn(f64, f64) -> f64,
    p_m: &dyn Fn(f64, f64) -> f64,
    kappa2: f64,
    lambda_check: f64,
    varpi_lambda: f64,
) -> Result<FlrwResiduals, CosmoError> {
    let a = traj.column("a").ok_or(CosmoError::Invalid("trajectory needs an `a` column"))?;
    let h = traj.column("H").ok_or(CosmoError::Invalid("trajectory needs an `H` column"))?;
    let t = &traj.s;
    let n = t.len();
    if n < 3 {
        return Err(CosmoError::Invalid("needs at least three samples"));
    }
    let dh = |i: usize| -> f64 {
        let (i0, i1, i2) = if i == 0 {
            (0, 1, 2)
        } else if i == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        // derivative of the quadratic through three points, evaluated at t[i]
        let (x0, x1, x2) = (t[i0], t[i1], t[i2]);
        let x = t[i];
        h[i0] * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + h[i1] * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + h[i2] * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let (rho, p) = (rho_m(t[i], a[i]), p_m(t[i], a[i]));
        first.push(3.0 * h[i] * h[i] - kappa2 * rho - lambda_check);
        second.push(2.0 * dh(i) + kappa2 * (rho + p) + (1.0 + varpi_lambda) * lambda_check);
    }
    let max_first = first.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_second = second.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FlrwResiduals { first, second, max_first, max_second })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcdmSpec {
    pub h0: f64,
    pub rho0: f64,
    pub a0: f64,
    pub kappa2: f64,
}

impl LcdmSpec {
    /// ξ = κ²ρ₀ / (3H₀²).
    pub fn xi(&self) -> f64 {
        self.kappa2 * self.rho0 / (3.0 * self.h0 * self.h0)
    }

    /// q(ζ) = H₀² + (κ²/3)ρ₀a₀⁻³e^{−3ζ}.
    pub fn q(&self, zeta: f64) -> f64 {
        self.h0 * self.h0 + self.kappa2 / 3.0 * self.rho0 * self.a0.powi(-3) * (-3.0 * zeta).exp()
    }

    pub fn dq(&self, zeta: f64) -> f64 {
        -self.kappa2 * self.rho0 * self.a0.powi(-3) * (-3.0 * zeta).exp()
    }
}

/// R̂ = 3∂_ζq + 12q.
pub fn curvature_from_q(q: f64, dq: f64) -> f64 {
    3.0 * dq + 12.0 * q
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfoldingPoint {
    pub q: f64,
    /// Closed form 12H₀² + κ²ρ₀a₀⁻³e^{−3ζ}.
    pub rhat: f64,
    /// X = −3 + R̂/(3H₀²).
    pub x: f64,
}

pub fn efolding_lcdm(s: &LcdmSpec, zeta: f64) -> EfoldingPoint {
    let q = s.q(zeta);
    let rhat = 12.0 * s.h0 * s.h0 + s.kappa2 * s.rho0 * s.a0.powi(-3) * (-3.0 * zeta).exp();
    EfoldingPoint { q, rhat, x: -3.0 + rhat / (3.0 * s.h0 * s.h0) }
}

/// R̂(ζ) for q = q_s e^{−cζ} + q_p e^{cζ}.
pub fn powerlaw_curvature(zeta: f64, c: f64, q_s: f64, q_p: f64) -> f64 {
    let (em, ep) = ((-c * zeta).exp(), (c * zeta).exp());
    curvature_from_q(q_s * em + q_p * ep, -c * q_s * em + c * q_p * ep)
}

/// Positive roots u = e^{cζ} of (12 + 3c)q_p u² − R̂u + (12 − 3c)q_s = 0,
/// largest first.
pub fn invert_powerlaw(rhat: f64, c: f64, q_s: f64, q_p: f64) -> Result<Vec<f64>, CosmoError> {
    let a2 = (12.0 + 3.0 * c) * q_p;
    let a0 = (12.0 - 3.0 * c) * q_s;
    let mut roots = if a2 == 0.0 {
        if rhat == 0.0 {
            return Err(CosmoError::Invalid("R̂ = 0 with a degenerate quadratic"));
        }
        vec![a0 / rhat]
    } else if a0 == 0.0 {
        vec![rhat / a2]
    } else {
        let disc = rhat * rhat - 4.0 * a2 * a0;
        if disc < 0.0 {
            return Err(CosmoError::NegativeDiscriminant(disc));
        }
        let sq = disc.sqrt();
        // numerically stable pair
        let qq = -0.5 * (-rhat - rhat.signum() * sq);
        let mut v = vec![qq / a2];
        if qq != 0.0 {
            v.push(a0 / qq);
        }
        v
    };
    roots.retain(|u| *u > 0.0 && u.is_finite());
    roots.sort_by(|a, b| b.total_cmp(a));
    roots.dedup();
    if roots.is_empty() {
        return Err(CosmoError::NoPhysicalRoot);
    }
    Ok(roots)
}

/// The printed normalisation (q_s = q_p = 1):
/// e^{cζ} = [R̂ ± √(R̂² − 4(144 − 9c²))] / (6(4 + c)), and R̂/24 for c = 4.
pub fn invert_powerlaw_printed(rhat: f64, c: f64) -> Vec<f64> {
    if c == 4.0 {
        return vec![rhat / 24.0];
    }
    let disc = rhat * rhat - 4.0 * (144.0 - 9.0 * c * c);
    if disc < 0.0 {
        return Vec::new();
    }
    let d = 6.0 * (4.0 + c);
    vec![(rhat + disc.sqrt()) / d, (rhat - disc.sqrt()) / d]
}

/// True when the stop reason is a divergence rather than a bad request.
pub fn is_blowup(kind: &OdeErrorKind) -> bool {
    matches!(kind, OdeErrorKind::Blowup { .. } | OdeErrorKind::StepUnderflow { .. } | OdeErrorKind::NonFinite)
}
