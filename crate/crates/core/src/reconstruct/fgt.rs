//! R + F(P) + G(T) models on the de Sitter background and the redshift
//! form of the modified FLRW equations.

use serde::{Deserialize, Serialize};

use super::{FValues, Invariants, ReconstructError};
use crate::fieldkit::Field;

/// (b1, b2, b3) as printed.
pub const PRINTED_B: [f64; 3] = [-1.327, 3.414, 1.38];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FgtBranch {
    F,
    G,
}

/// F̌ = c1P̌^{b1} + P̌^{b2/3}[c2 cos((b3/3)lnP̌) + c3 sin((b3/3)lnP̌)] + c4 + 3ξP̌
/// and Ǧ likewise in Ť with c̃ and −3ξŤ; F = H0²F̌(P/P0), G = H0²Ǧ(T/T0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgtModel {
    pub c: [f64; 4],
    pub ct: [f64; 4],
    pub b: [f64; 3],
    pub xi: f64,
    pub h0: f64,
    pub kappa2: f64,
}

impl FgtModel {
    pub fn new(c: [f64; 4], ct: [f64; 4], xi: f64, h0: f64, kappa2: f64) -> Self {
        FgtModel { c, ct, b: PRINTED_B, xi, h0, kappa2 }
    }

    /// P0 = −9H0⁴ξ/κ².
    pub fn p0(&self) -> f64 {
        -9.0 * self.h0.powi(4) * self.xi / self.kappa2
    }

    /// T0 = −3H0²ξ/κ².
    pub fn t0(&self) -> f64 {
        -3.0 * self.h0 * self.h0 * self.xi / self.kappa2
    }

    fn branch(&self, which: FgtBranch) -> ([f64; 4], f64) {
        match which {
            FgtBranch::F => (self.c, 3.0 * self.xi),
            FgtBranch::G => (self.ct, -3.0 * self.xi),
        }
    }

    pub(super) fn eval(&self, at: Invariants) -> Result<FValues, ReconstructError> {
        let h2 = self.h0 * self.h0;
        let (p0, t0) = (self.p0(), self.t0());
        let (fv, fd) = fgt_derivative(self, at.p / p0, FgtBranch::F)?;
        let (gv, gd) = fgt_derivative(self, at.t / t0, FgtBranch::G)?;
        Ok(FValues { f: at.r + h2 * (fv + gv), f1: 1.0, f11: 0.0, f2: h2 * gd / t0, f3: h2 * fd / p0 })
    }
}

/// F̌(P̌) or Ǧ(Ť).
pub fn fgt_eval(m: &FgtModel, arg: f64, which: FgtBranch) -> Result<f64, ReconstructError> {
    fgt_derivative(m, arg, which).map(|v| v.0)
}

/// Value and first derivative in the normalised argument.
pub fn fgt_derivative(m: &FgtModel, arg: f64, which: FgtBranch) -> Result<(f64, f64), ReconstructError> {
    if !(arg > 0.0) {
        return Err(ReconstructError::Domain(format!("normalised argument {arg} must be positive")));
    }
    let (c, lin) = m.branch(which);
    let [b1, b2, b3] = m.b;
    let (beta, om) = (b2 / 3.0, b3 / 3.0);
    let l = arg.ln();
    let (co, si) = ((om * l).cos(), (om * l).sin());
    let pb = arg.powf(beta);
    let v = c[0] * arg.powf(b1) + pb * (c[1] * co + c[2] * si) + c[3] + lin * arg;
    let d = c[0] * b1 * arg.powf(b1 - 1.0)
        + pb / arg * ((beta * c[1] + om * c[2]) * co + (beta * c[2] - om * c[1]) * si)
        + lin;
    Ok((v, d))
}

/// b(9b² − 12b − 6)/2: exponents b of F̌ ∝ P̌^b solving the homogeneous
/// de Sitter reduction, with the constant branch b = 0.
pub fn ds_characteristic_cubic(b: f64) -> f64 {
    b * (9.0 * b * b - 12.0 * b - 6.0) / 2.0
}

/// Roots of [`ds_characteristic_cubic`]: (2 + √10)/3, (2 − √10)/3, 0.
pub fn derived_fgt_exponents() -> [f64; 3] {
    let s = 10f64.sqrt();
    [(2.0 + s) / 3.0, (2.0 - s) / 3.0, 0.0]
}

/// {b1, (b2 ± i b3)/3} as (re, im) pairs.
pub fn printed_fgt_exponents() -> [(f64, f64); 3] {
    let [b1, b2, b3] = PRINTED_B;
    [(b1, 0.0), (b2 / 3.0, b3 / 3.0), (b2 / 3.0, -b3 / 3.0)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootChoice {
    Printed,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FgtRootComparison {
    pub printed: [(f64, f64); 3],
    pub derived: [f64; 3],
    /// Largest distance from a printed exponent to the nearest derived root.
    pub max_mismatch: f64,
    pub adopted: RootChoice,
}

/// Cross-check the printed exponents against the derived roots with tolerance `tol`.
pub fn compare_fgt_exponents(tol: f64) -> FgtRootComparison {
    let printed = printed_fgt_exponents();
    let derived = derived_fgt_exponents();
    let max_mismatch = printed
        .iter()
        .map(|&(re, im)| derived.iter().map(|&d| (re - d).hypot(im)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let adopted = if max_mismatch <= tol { RootChoice::Printed } else { RootChoice::Derived };
    FgtRootComparison { printed, derived, max_mismatch, adopted }
}

/// Inputs of the redshift system, all fields in z (the `t` slot).
#[derive(Clone, Debug)]
pub struct CeqInputs {
    /// F̂(z), the non-curvature part of f̂.
    pub f: Field,
    pub g: Field,
    pub h: Field,
    pub rho: Field,
    /// ς = ρ ¹F̂.
    pub varsigma: Field,
    pub kappa2: f64,
    /// ¹Ĝ, constant in the gauge ∂_z ¹Ĝ = 0.
    pub g1: f64,
}

/// The three residuals at z of
/// 3H² + ½[F + G − 3(3H² − H^◇)ς] − ρ(κ² − ¹G),
/// −3H² − 2H^◇ − ½[F + G − ς^◇◇ − 4Hς^◇ − (3H² + H^◇)ς],
/// ς ∂_zP − ρ ∂_zF with P = −3ρ(H² − (1+z)HH_z),
/// using s^◇ = −(1+z)H∂_z s.
pub fn ceq_residual(c: &CeqInputs, z: f64) -> Result<[f64; 3], ReconstructError> {
    let p = [0.0, 0.0, z];
    let hj = c.h.jet(p, 2)?;
    let (h, hz, hzz) = (hj.value(), hj.derivative(2).value(), hj.derivative(2).derivative(2).value());
    if h == 0.0 {
        return Err(ReconstructError::ZeroHubble(z));
    }
    let rj = c.rho.jet(p, 1)?;
    let (rho, rho_z) = (rj.value(), rj.derivative(2).value());
    let sj = c.varsigma.jet(p, 2)?;
    let (s, sz, szz) = (sj.value(), sj.derivative(2).value(), sj.derivative(2).derivative(2).value());
    let fj = c.f.jet(p, 1)?;
    let g = c.g.value(p)?;
    let y = 1.0 + z;
    let hd = -y * h * hz;
    let sd = -y * h * sz;
    let sdd = y * h * h * sz + y * y * h * hz * sz + y * y * h * h * szz;
    let ff = fj.value() + g;
    let r1 = 3.0 * h * h + 0.5 * (ff - 3.0 * (3.0 * h * h - hd) * s) - rho * (c.kappa2 - c.g1);
    let r2 = -3.0 * h * h - 2.0 * hd - 0.5 * (ff - sdd - 4.0 * h * sd - (3.0 * h * h + hd) * s);
    let bracket = h * h - y * h * hz;
    let bracket_z = 2.0 * h * hz - h * hz - y * (hz * hz + h * hzz);
    let p_z = -3.0 * (rho_z * bracket + rho * bracket_z);
    let r3 = s * p_z - rho * fj.derivative(2).value();
    Ok([r1, r2, r3])
}

/// FGT model on H = H0 with ρ = ρ0(1+z)³, κ²ρ0 = 3H0²ξ, so that P̌ = Ť = (1+z)³.
pub fn fgt_ceq_inputs(m: &FgtModel) -> CeqInputs {
    let y = 1.0 + &Field::coordinate(2);
    let ly = y.ln();
    let h2 = m.h0 * m.h0;
    let rho0 = 3.0 * h2 * m.xi / m.kappa2;
    let rho = rho0 * &y.powi(3);
    let [b1, b2, b3] = m.b;
    let (beta, om) = (b2 / 3.0, b3 / 3.0);
    // P̌ = y³: P̌^e = e^{3e ln y}, (b3/3) ln P̌ = b3 ln y
    let pw = |e: f64| (3.0 * e * &ly).exp();
    let (co, si) = ((b3 * &ly).cos(), (b3 * &ly).sin());
    let branch = |c: [f64; 4], lin: f64| {
        &(&(&(c[0] * &pw(b1)) + &(&pw(beta) * &(&(c[1] * &co) + &(c[2] * &si)))) + c[3]) + &(lin * &pw(1.0))
    };
    let f = h2 * &branch(m.c, 3.0 * m.xi);
    let g = h2 * &branch(m.ct, -3.0 * m.xi);
    let c = m.c;
    let df = &(&(c[0] * b1 * &pw(b1 - 1.0))
        + &(&pw(beta - 1.0) * &(&((beta * c[1] + om * c[2]) * &co) + &((beta * c[2] - om * c[1]) * &si))))
        + 3.0 * m.xi;
    let varsigma = &rho * &((h2 / m.p0()) * &df);
    CeqInputs { f, g, h: Field::constant(m.h0), rho, varsigma, kappa2: m.kappa2, g1: 0.0 }
}
