//! N-adapted differential geometry: d-metrics, frames, anholonomy, the
//! Levi-Civita and canonical d-connections, torsion, Ricci tensors and
//! Einstein-equation residuals.
//!
//! Coordinates are u = (x1, x2, y3, t) with indices 0..4; y3 is Killing.
//! Connection coefficients use `gamma[a][b][c] = Γ^a_{bc}`, the a-component
//! of D_{e_b} e_c. Curvature is
//! `R^a_{bcd} = e_c Γ^a_{db} − e_d Γ^a_{cb} + Γ^a_{ct}Γ^t_{db} − Γ^a_{dt}Γ^t_{cb} − Γ^a_{tb}W^t_{cd}`
//! with `[e_c, e_d] = W^t_{cd} e_t`, and Ricci is `R_{bd} = R^c_{bcd}`.

pub mod tensor;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fieldkit::{Field, FieldError, Jet};
use tensor::{d, det_values, identity, inverse, inverse2, values2, values3, zeros2, zeros3, M4, T3};

/// Hard threshold below which |det g| counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("degenerate metric at {point:?} (|det g| = {det:e})")]
    Degenerate { point: [f64; 3], det: f64 },
    #[error("degenerate {block}-block at {point:?}")]
    DegenerateBlock { point: [f64; 3], block: &'static str },
    #[error("signature at {point:?} is not Lorentzian: frame metric diagonal {diag:?}")]
    NotLorentzian { point: [f64; 3], diag: [f64; 4] },
}

/// N-adapted metric data. All coefficients are fields over (x1, x2, t).
#[derive(Clone, Debug)]
pub struct DMetric {
    pub g1: Field,
    pub g2: Field,
    pub h3: Field,
    pub h4: Field,
    /// N_i^3.
    pub n1: Field,
    pub n2: Field,
    /// N_i^4.
    pub w1: Field,
    pub w2: Field,
    pub omega: Field,
}

impl DMetric {
    pub fn diagonal(g1: Field, g2: Field, h3: Field, h4: Field) -> Self {
        let zero = Field::constant(0.0);
        DMetric {
            g1,
            g2,
            h3,
            h4,
            n1: zero.clone(),
            n2: zero.clone(),
            w1: zero.clone(),
            w2: zero,
            omega: Field::constant(1.0),
        }
    }

    /// Spatially flat FLRW: a²(dx1² + dx2² + dy3²) − dt².
    pub fn flrw(a: Field) -> Self {
        let a2 = &a * &a;
        Self::diagonal(a2.clone(), a2.clone(), a2, Field::constant(-1.0))
    }

    pub fn jets(&self, p: [f64; 3], order: usize) -> Result<DMetricJets, FieldError> {
        Ok(DMetricJets {
            point: p,
            g: [self.g1.jet(p, order)?, self.g2.jet(p, order)?],
            h: [self.h3.jet(p, order)?, self.h4.jet(p, order)?],
            n: [self.n1.jet(p, order)?, self.n2.jet(p, order)?],
            w: [self.w1.jet(p, order)?, self.w2.jet(p, order)?],
            omega: self.omega.jet(p, order)?,
        })
    }

    /// Values (g1, g2, h3, h4, n1, n2, w1, w2, omega) at a point.
    pub fn sample(&self, p: [f64; 3]) -> Result<[f64; 9], FieldError> {
        let j = self.jets(p, 0)?;
        Ok([
            j.g[0].value(),
            j.g[1].value(),
            j.h[0].value(),
            j.h[1].value(),
            j.n[0].value(),
            j.n[1].value(),
            j.w[0].value(),
            j.w[1].value(),
            j.omega.value(),
        ])
    }
}

/// Jets of all d-metric coefficients at one point.
#[derive(Clone, Debug)]
pub struct DMetricJets {
    pub point: [f64; 3],
    pub g: [Jet; 2],
    pub h: [Jet; 2],
    pub n: [Jet; 2],
    pub w: [Jet; 2],
    pub omega: Jet,
}

impl DMetricJets {
    pub fn order(&self) -> usize {
        self.g[0].order()
    }

    /// Vertical metric ω²h_a.
    pub fn vmetric(&self) -> [Jet; 2] {
        let o2 = self.omega * self.omega;
        [o2 * self.h[0], o2 * self.h[1]]
    }

    /// `N[i][a]` = N_i^{a+3}: column 0 is n_i, column 1 is w_i.
    pub fn nconn(&self) -> [[Jet; 2]; 2] {
        [[self.n[0], self.w[0]], [self.n[1], self.w[1]]]
    }

    /// Coordinate-basis metric g_{μν} built from the block form.
    pub fn coordinate_metric(&self) -> M4 {
        let order = self.order();
        let hv = self.vmetric();
        let nn = self.nconn();
        let mut g = zeros2(order);
        for i in 0..2 {
            for j in 0..2 {
                let mut v = if i == j { self.g[i] } else { Jet::zero(order) };
                for a in 0..2 {
                    v += nn[i][a] * nn[j][a] * hv[a];
                }
                g[i][j] = v;
            }
            for a in 0..2 {
                let v = nn[i][a] * hv[a];
                g[i][2 + a] = v;
                g[2 + a][i] = v;
            }
        }
        g[2][2] = hv[0];
        g[3][3] = hv[1];
        g
    }

    /// Frame `E[α][μ]`: e_i = ∂_i − N_i^a ∂_a, e_a = ∂_a.
    pub fn frame(&self) -> M4 {
        let mut e = identity(self.order());
        let nn = self.nconn();
        for i in 0..2 {
            for a in 0..2 {
                e[i][2 + a] = -nn[i][a];
            }
        }
        e
    }

    /// Coframe `C[α][μ]`: e^i = dx^i, e^a = dy^a + N_i^a dx^i.
    pub fn coframe(&self) -> M4 {
        let mut c = identity(self.order());
        let nn = self.nconn();
        for i in 0..2 {
            for a in 0..2 {
                c[2 + a][i] = nn[i][a];
            }
        }
        c
    }

    /// The d-metric in the N-adapted frame: diag(g1, g2, ω²h3, ω²h4).
    pub fn frame_metric(&self) -> M4 {
        let mut g = zeros2(self.order());
        let hv = self.vmetric();
        g[0][0] = self.g[0];
        g[1][1] = self.g[1];
        g[2][2] = hv[0];
        g[3][3] = hv[1];
        g
    }
}

/// Frame, coframe, metric and anholonomy coefficients in one basis.
#[derive(Clone, Debug)]
pub struct FrameGeometry {
    pub point: [f64; 3],
    pub e: M4,
    pub c: M4,
    pub g: M4,
    pub ginv: M4,
    /// `w[c][a][b]` = W^c_{ab} with [e_a, e_b] = W^c_{ab} e_c.
    pub w: T3,
}

impl FrameGeometry {
    fn build(point: [f64; 3], e: M4, c: M4, g: M4) -> Result<Self, GeometryError> {
        let det = det_values(&values2(&g));
        if !(det.abs() >= DEGENERACY_THRESHOLD) {
            return Err(GeometryError::Degenerate { point, det });
        }
        let ginv = inverse(&g);
        let order = e[0][0].order().saturating_sub(1);
        let mut w = zeros3(order);
        for a in 0..4 {
            for b in 0..4 {
                let mut comm = [Jet::zero(order); 4];
                for (mu, cm) in comm.iter_mut().enumerate() {
                    *cm = frame_derivative(&e, a, &e[b][mu]) - frame_derivative(&e, b, &e[a][mu]);
                }
                for cc in 0..4 {
                    let mut s = Jet::zero(order);
                    for mu in 0..4 {
                        s += c[cc][mu] * comm[mu];
                    }
                    w[cc][a][b] = s;
                }
            }
        }
        Ok(FrameGeometry { point, e, c, g, ginv, w })
    }

    /// Holonomic coordinate basis.
    pub fn coordinate(m: &DMetricJets) -> Result<Self, GeometryError> {
        let order = m.order();
        Self::build(m.point, identity(order), identity(order), m.coordinate_metric())
    }

    /// N-adapted basis with the diagonal d-metric.
    pub fn n_adapted(m: &DMetricJets) -> Result<Self, GeometryError> {
        Self::build(m.point, m.frame(), m.coframe(), m.frame_metric())
    }

    pub fn order(&self) -> usize {
        self.g[0][0].order()
    }

    /// e_a(f) in this basis.
    pub fn derive(&self, a: usize, f: &Jet) -> Jet {
        frame_derivative(&self.e, a, f)
    }
}

fn frame_derivative(e: &M4, a: usize, f: &Jet) -> Jet {
    let mut s = Jet::zero(f.order().saturating_sub(1).min(e[a][0].order()));
    for mu in [0usize, 1, 3] {
        s += e[a][mu] * d(f, mu);
    }
    s
}

/// Coordinate Christoffel symbols Γ^λ_{μν} = ½ g^{λσ}(∂_μ g_{σν} + ∂_ν g_{σμ} − ∂_σ g_{μν}).
pub fn christoffel(g: &M4, ginv: &M4) -> T3 {
    let order = g[0][0].order().saturating_sub(1);
    let mut dg = [zeros2(order); 4];
    for (s, slot) in dg.iter_mut().enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                slot[m][n] = d(&g[m][n], s);
            }
        }
    }
    let mut lower = zeros3(order);
    for s in 0..4 {
        for m in 0..4 {
            for n in m..4 {
                let v = (dg[m][s][n] + dg[n][s][m] - dg[s][m][n]).scale(0.5);
                lower[s][m][n] = v;
                lower[s][n][m] = v;
            }
        }
    }
    raise_first(ginv, &lower)
}

fn raise_first(ginv: &M4, lower: &T3) -> T3 {
    let order = lower[0][0][0].order();
    let mut out = zeros3(order);
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                let mut v = Jet::zero(order);
                for s in 0..4 {
                    if ginv[l][s].coeffs().iter().any(|c| *c != 0.0) {
                        v += ginv[l][s] * lower[s][m][n];
                    }
                }
                out[l][m][n] = v;
            }
        }
    }
    out
}

/// Levi-Civita connection in an arbitrary basis (Koszul formula).
pub fn levi_civita_frame(fg: &FrameGeometry) -> T3 {
    let order = fg.order().saturating_sub(1);
    let mut lower = zeros3(order);
    for dd in 0..4 {
        for c in 0..4 {
            for b in 0..4 {
                let mut v = fg.derive(c, &fg.g[b][dd]) + fg.derive(b, &fg.g[c][dd]) - fg.derive(dd, &fg.g[c][b]);
                for e in 0..4 {
                    v += fg.w[e][c][b] * fg.g[e][dd] - fg.w[e][c][dd] * fg.g[e][b] - fg.w[e][b][dd] * fg.g[e][c];
                }
                lower[dd][c][b] = v.scale(0.5);
            }
        }
    }
    raise_first(&fg.ginv, &lower)
}

/// Canonical d-connection in the N-adapted basis.
pub fn canonical_frame(fg: &FrameGeometry, m: &DMetricJets) -> Result<T3, GeometryError> {
    let order = fg.order().saturating_sub(1);
    let gh = [[fg.g[0][0], fg.g[0][1]], [fg.g[1][0], fg.g[1][1]]];
    let hv = [[fg.g[2][2], fg.g[2][3]], [fg.g[3][2], fg.g[3][3]]];
    let det_h = gh[0][0].value() * gh[1][1].value() - gh[0][1].value() * gh[1][0].value();
    if det_h.abs() < DEGENERACY_THRESHOLD {
        return Err(GeometryError::DegenerateBlock { point: fg.point, block: "h" });
    }
    let det_v = hv[0][0].value() * hv[1][1].value() - hv[0][1].value() * hv[1][0].value();
    if det_v.abs() < DEGENERACY_THRESHOLD {
        return Err(GeometryError::DegenerateBlock { point: fg.point, block: "v" });
    }
    let ghi = inverse2(gh);
    let hvi = inverse2(hv);
    let nn = m.nconn();
    // vertical coordinate derivative ∂_b, b ∈ {0 → y3, 1 → t}
    let dv = |f: &Jet, b: usize| d(f, 2 + b);
    let mut gam = zeros3(order);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut v = Jet::zero(order);
                for r in 0..2 {
                    let inner = fg.derive(k, &gh[j][r]) + fg.derive(j, &gh[k][r]) - fg.derive(r, &gh[j][k]);
                    v += ghi[i][r] * inner;
                }
                // Γ^i_{kj} = L^i_{jk}
                gam[i][k][j] = v.scale(0.5);
            }
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                let mut v = Jet::zero(order);
                for c in 0..2 {
                    let mut inner = fg.derive(k, &hv[b][c]);
                    for dd in 0..2 {
                        inner -= hv[dd][c].truncate(order) * dv(&nn[k][dd], b)
                            + hv[dd][b].truncate(order) * dv(&nn[k][dd], c);
                    }
                    v += hvi[a][c] * inner;
                }
                // Γ^a_{kb} = L^a_{bk}
                gam[2 + a][k][2 + b] = dv(&nn[k][a], b) + v.scale(0.5);
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            for c in 0..2 {
                let mut v = Jet::zero(order);
                for k in 0..2 {
                    v += ghi[i][k] * dv(&gh[j][k], c);
                }
                // Γ^i_{cj} = C^i_{jc}
                gam[i][2 + c][j] = v.scale(0.5);
            }
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let mut v = Jet::zero(order);
                for dd in 0..2 {
                    v += hvi[a][dd] * (dv(&hv[b][dd], c) + dv(&hv[c][dd], b) - dv(&hv[b][c], dd));
                }
                // Γ^a_{cb} = C^a_{bc}
                gam[2 + a][2 + c][2 + b] = v.scale(0.5);
            }
        }
    }
    Ok(gam)
}

/// Ricci tensor `R_{bd} = R^c_{bcd}` of a connection given in basis `fg`.
pub fn ricci(fg: &FrameGeometry, gam: &T3) -> M4 {
    let order = gam[0][0][0].order().saturating_sub(1);
    let mut ric = zeros2(order);
    for b in 0..4 {
        for dd in 0..4 {
            let mut v = Jet::zero(order);
            for c in 0..4 {
                v += fg.derive(c, &gam[c][dd][b]) - fg.derive(dd, &gam[c][c][b]);
                for t in 0..4 {
                    v += gam[c][c][t] * gam[t][dd][b] - gam[c][dd][t] * gam[t][c][b] - gam[c][t][b] * fg.w[t][c][dd];
                }
            }
            ric[b][dd] = v;
        }
    }
    ric
}

/// Torsion `T^a_{bc} = Γ^a_{bc} − Γ^a_{cb} − W^a_{bc}` (values).
pub fn torsion(fg: &FrameGeometry, gam: &T3) -> [[[f64; 4]; 4]; 4] {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| gam[a][b][c].value() - gam[a][c][b].value() - fg.w[a][b][c].value())
        })
    })
}

/// Covariant derivative of the metric, max |D_c g_{ab}|.
pub fn nonmetricity(fg: &FrameGeometry, gam: &T3) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                let mut v = fg.derive(c, &fg.g[a][b]).value();
                for t in 0..4 {
                    v -= gam[t][c][a].value() * fg.g[t][b].value() + gam[t][c][b].value() * fg.g[a][t].value();
                }
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FrameTag {
    Coordinate,
    NAdapted,
}

/// Connection coefficients `gamma[a][b][c]` = Γ^a_{bc} at a point.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionCoeffs {
    pub gamma: [[[f64; 4]; 4]; 4],
    pub frame: FrameTag,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub point: [f64; 3],
    pub frame: FrameTag,
    pub ricci: [[f64; 4]; 4],
    pub ricci_mixed: [[f64; 4]; 4],
    pub scalar: f64,
    pub einstein_mixed: [[f64; 4]; 4],
}

impl CurvatureReport {
    fn from_ricci(point: [f64; 3], frame: FrameTag, ric: &M4, ginv: &M4) -> Self {
        let r = values2(ric);
        let gi = values2(ginv);
        let mut mixed = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                mixed[a][b] = (0..4).map(|c| gi[a][c] * r[c][b]).sum();
            }
        }
        let scalar: f64 = (0..4).map(|a| mixed[a][a]).sum();
        let mut einstein = mixed;
        for (a, row) in einstein.iter_mut().enumerate() {
            row[a] -= 0.5 * scalar;
        }
        CurvatureReport { point, frame, ricci: r, ricci_mixed: mixed, scalar, einstein_mixed: einstein }
    }

    /// max_{a,b} |R^a_b − Λ δ^a_b|.
    pub fn residual(&self, lambda: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let target = if a == b { lambda } else { 0.0 };
                worst = worst.max((self.ricci_mixed[a][b] - target).abs());
            }
        }
        worst
    }

    /// max |R_{ab} − R_{ba}|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                worst = worst.max((self.ricci[a][b] - self.ricci[b][a]).abs());
            }
        }
        worst
    }
}

/// Coordinate metric matrix at a point.
pub fn coordinate_metric(m: &DMetric, p: [f64; 3]) -> Result<[[f64; 4]; 4], GeometryError> {
    let g = values2(&m.jets(p, 0)?.coordinate_metric());
    let det = det_values(&g);
    if !(det.abs() >= DEGENERACY_THRESHOLD) {
        return Err(GeometryError::Degenerate { point: p, det });
    }
    Ok(g)
}

/// Signs of the N-adapted diagonal; Lorentzian iff exactly one is negative.
pub fn check_lorentzian(m: &DMetric, p: [f64; 3]) -> Result<(), GeometryError> {
    let j = m.jets(p, 0)?;
    let hv = j.vmetric();
    let diag = [j.g[0].value(), j.g[1].value(), hv[0].value(), hv[1].value()];
    let negatives = diag.iter().filter(|v| **v < 0.0).count();
    if negatives != 1 || diag.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(GeometryError::NotLorentzian { point: p, diag });
    }
    Ok(())
}

/// Anholonomy coefficients of the N-adapted frame.
#[derive(Clone, Debug, Serialize)]
pub struct Anholonomy {
    /// `w_v[i][a][b]` = W^b_{ia} = ∂_a N_i^b (a, b over y3, t).
    pub w_v: [[[f64; 2]; 2]; 2],
    /// `omega[a][i][j]` = Ω^a_{ij} = e_j(N_i^a) − e_i(N_j^a).
    pub omega: [[[f64; 2]; 2]; 2],
}

pub fn anholonomy(m: &DMetric, p: [f64; 3]) -> Result<Anholonomy, GeometryError> {
    let j = m.jets(p, 1)?;
    let nn = j.nconn();
    let mut w_v = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                w_v[i][a][b] = d(&nn[i][b], 2 + a).value();
            }
        }
    }
    // e_j f = ∂_j f − N_j^b ∂_b f
    let e = |jj: usize, f: &Jet| {
        let mut v = d(f, jj).value();
        for b in 0..2 {
            v -= nn[jj][b].value() * d(f, 2 + b).value();
        }
        v
    };
    let mut omega = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for i in 0..2 {
            for jj in 0..2 {
                omega[a][i][jj] = e(jj, &nn[i][a]) - e(i, &nn[jj][a]);
            }
        }
    }
    Ok(Anholonomy { w_v, omega })
}

/// Ricci of the Levi-Civita connection in the coordinate basis.
pub fn levi_civita_ricci(m: &DMetric, p: [f64; 3]) -> Result<CurvatureReport, GeometryError> {
    let j = m.jets(p, 2)?;
    let fg = FrameGeometry::coordinate(&j)?;
    let gam = christoffel(&fg.g, &fg.ginv);
    let ric = ricci(&fg, &gam);
    Ok(CurvatureReport::from_ricci(p, FrameTag::Coordinate, &ric, &fg.ginv))
}

/// Ricci of the Levi-Civita connection computed in the N-adapted basis (with
/// the W-term), reported with frame indices.
pub fn levi_civita_ricci_nadapted(m: &DMetric, p: [f64; 3]) -> Result<CurvatureReport, GeometryError> {
    let j = m.jets(p, 2)?;
    let fg = FrameGeometry::n_adapted(&j)?;
    let gam = levi_civita_frame(&fg);
    let ric = ricci(&fg, &gam);
    Ok(CurvatureReport::from_ricci(p, FrameTag::NAdapted, &ric, &fg.ginv))
}

/// Transform mixed frame components to coordinates: R^μ_ν = E_a^μ R^a_b C^b_ν.
pub fn frame_to_coordinate_mixed(
    m: &DMetric,
    p: [f64; 3],
    mixed: &[[f64; 4]; 4],
) -> Result<[[f64; 4]; 4], GeometryError> {
    let j = m.jets(p, 0)?;
    let e = values2(&j.frame());
    let c = values2(&j.coframe());
    let mut out = [[0.0; 4]; 4];
    for mu in 0..4 {
        for nu in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += e[a][mu] * mixed[a][b] * c[b][nu];
                }
            }
            out[mu][nu] = s;
        }
    }
    Ok(out)
}

/// Canonical d-connection coefficients in the N-adapted basis.
pub fn canonical_dconnection(m: &DMetric, p: [f64; 3]) -> Result<ConnectionCoeffs, GeometryError> {
    let j = m.jets(p, 1)?;
    let fg = FrameGeometry::n_adapted(&j)?;
    let gam = canonical_frame(&fg, &j)?;
    Ok(ConnectionCoeffs { gamma: values3(&gam), frame: FrameTag::NAdapted })
}

/// Full diagnostics of the canonical d-connection at one point.
#[derive(Clone, Debug, Serialize)]
pub struct CanonicalReport {
    pub coefficients: ConnectionCoeffs,
    /// max |D̂_c g_{ab}|.
    pub nonmetricity: f64,
    /// max |Ẑ| = max |Γ̂ − Γ_LC| in the N-adapted basis.
    pub distortion: f64,
    /// Ricci of D̂ and R̂ = g^{ij}R̂_{ij} + g^{ab}R̂_{ab}.
    pub curvature: CurvatureReport,
    /// Scalar curvature of the Levi-Civita connection.
    pub lc_scalar: f64,
    pub torsion: TorsionReport,
}

pub fn canonical_report(m: &DMetric, p: [f64; 3]) -> Result<CanonicalReport, GeometryError> {
    let j = m.jets(p, 2)?;
    let fg = FrameGeometry::n_adapted(&j)?;
    let gam = canonical_frame(&fg, &j)?;
    let lc = levi_civita_frame(&fg);
    let mut distortion: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                distortion = distortion.max((gam[a][b][c].value() - lc[a][b][c].value()).abs());
            }
        }
    }
    let ric = ricci(&fg, &gam);
    let curvature = CurvatureReport::from_ricci(p, FrameTag::NAdapted, &ric, &fg.ginv);
    let lc_ric = ricci(&fg, &lc);
    let lc_scalar = CurvatureReport::from_ricci(p, FrameTag::NAdapted, &lc_ric, &fg.ginv).scalar;
    let torsion = torsion_families(&fg, &gam, &j);
    Ok(CanonicalReport {
        coefficients: ConnectionCoeffs { gamma: values3(&gam), frame: FrameTag::NAdapted },
        nonmetricity: nonmetricity(&fg, &gam),
        distortion,
        curvature,
        lc_scalar,
        torsion,
    })
}

/// The five d-torsion families of the canonical d-connection.
#[derive(Clone, Debug, Serialize)]
pub struct TorsionReport {
    /// T^i_{jk} = L^i_{jk} − L^i_{kj}, indexed [i][j][k].
    pub t_hhh: [[[f64; 2]; 2]; 2],
    /// T^i_{ja} = C^i_{ja}, indexed [i][j][a].
    pub t_hhv: [[[f64; 2]; 2]; 2],
    /// T^a_{ji} = −Ω^a_{ji}, indexed [a][j][i].
    pub t_vhh: [[[f64; 2]; 2]; 2],
    /// T^c_{aj} = L^c_{aj} − e_a(N^c_j), indexed [c][a][j].
    pub t_vvh: [[[f64; 2]; 2]; 2],
    /// T^a_{bc} = C^a_{bc} − C^a_{cb}, indexed [a][b][c].
    pub t_vvv: [[[f64; 2]; 2]; 2],
    pub max_norm: f64,
}

impl TorsionReport {
    pub fn families(&self) -> [&[[[f64; 2]; 2]; 2]; 5] {
        [&self.t_hhh, &self.t_hhv, &self.t_vhh, &self.t_vvh, &self.t_vvv]
    }
}

fn torsion_families(fg: &FrameGeometry, gam: &T3, m: &DMetricJets) -> TorsionReport {
    let g = values3(gam);
    // L^i_{jk} = Γ^i_{kj}, L^a_{bk} = Γ^a_{kb}, C^i_{jc} = Γ^i_{cj}, C^a_{bc} = Γ^a_{cb}
    let nn = m.nconn();
    let mut r = TorsionReport {
        t_hhh: [[[0.0; 2]; 2]; 2],
        t_hhv: [[[0.0; 2]; 2]; 2],
        t_vhh: [[[0.0; 2]; 2]; 2],
        t_vvh: [[[0.0; 2]; 2]; 2],
        t_vvv: [[[0.0; 2]; 2]; 2],
        max_norm: 0.0,
    };
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                r.t_hhh[x][y][z] = g[x][z][y] - g[x][y][z];
                r.t_hhv[x][y][z] = g[x][2 + z][y];
                // W^a_{ji} = Ω^a_{ji}
                r.t_vhh[x][y][z] = -fg.w[2 + x][y][z].value();
                // L^c_{aj} = Γ^c_{j a}
                r.t_vvh[x][y][z] = g[2 + x][z][2 + y] - d(&nn[z][x], 2 + y).value();
                r.t_vvv[x][y][z] = g[2 + x][2 + z][2 + y] - g[2 + x][2 + y][2 + z];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for fam in r.families() {
        for a in fam.iter().flatten().flatten() {
            worst = worst.max(a.abs());
        }
    }
    r.max_norm = worst;
    r
}

pub fn canonical_dtorsion(m: &DMetric, p: [f64; 3]) -> Result<TorsionReport, GeometryError> {
    let j = m.jets(p, 1)?;
    let fg = FrameGeometry::n_adapted(&j)?;
    let gam = canonical_frame(&fg, &j)?;
    Ok(torsion_families(&fg, &gam, &j))
}

/// Sup and RMS of ‖R^a_b − Λδ^a_b‖ over sample points.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualNorms {
    pub sup: f64,
    pub rms: f64,
    pub worst_point: [f64; 3],
    pub samples: usize,
}

pub fn einstein_residual(m: &DMetric, lambda: f64, points: &[[f64; 3]]) -> Result<ResidualNorms, GeometryError> {
    let per_point = points
        .par_iter()
        .map(|&p| levi_civita_ricci(m, p).map(|r| r.residual(lambda)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sup: f64 = 0.0;
    let mut worst_point = points.first().copied().unwrap_or([0.0; 3]);
    let mut sq = 0.0;
    for (v, p) in per_point.iter().zip(points) {
        if *v > sup {
            sup = *v;
            worst_point = *p;
        }
        sq += v * v;
    }
    Ok(ResidualNorms { sup, rms: (sq / points.len().max(1) as f64).sqrt(), worst_point, samples: points.len() })
}

/// ∇^μ G_{μν} of the Levi-Civita connection in coordinates.
pub fn contracted_bianchi(m: &DMetric, p: [f64; 3]) -> Result<[f64; 4], GeometryError> {
    let j = m.jets(p, 3)?;
    let fg = FrameGeometry::coordinate(&j)?;
    let gam = christoffel(&fg.g, &fg.ginv);
    let ric = ricci(&fg, &gam);
    let ginv1 = tensor::truncate2(&fg.ginv, 1);
    let g1 = tensor::truncate2(&fg.g, 1);
    let mut scalar = Jet::zero(1);
    for a in 0..4 {
        for b in 0..4 {
            scalar += ginv1[a][b] * ric[a][b];
        }
    }
    let mut ein = zeros2(1);
    for a in 0..4 {
        for b in 0..4 {
            ein[a][b] = ric[a][b] - g1[a][b] * scalar.scale(0.5);
        }
    }
    let gi = values2(&fg.ginv);
    let gv = values3(&gam);
    let ev = values2(&ein);
    let mut out = [0.0; 4];
    for (nu, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for mu in 0..4 {
            for al in 0..4 {
                if gi[mu][al] == 0.0 {
                    continue;
                }
                let mut cov = d(&ein[mu][nu], al).value();
                for l in 0..4 {
                    cov -= gv[l][al][mu] * ev[l][nu] + gv[l][al][nu] * ev[mu][l];
                }
                s += gi[mu][al] * cov;
            }
        }
        *o = s;
    }
    Ok(out)
}

/// max |e^a(e_b) − δ^a_b| of the N-adapted frame at a point.
pub fn frame_duality_error(m: &DMetric, p: [f64; 3]) -> Result<f64, GeometryError> {
    let j = m.jets(p, 0)?;
    let prod = values2(&tensor::matmul(&j.coframe(), &transpose(&j.frame())));
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((prod[a][b] - want).abs());
        }
    }
    Ok(worst)
}

fn transpose(m: &M4) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}
