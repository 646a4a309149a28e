#![allow(clippy::needless_range_loop)]

use afdm_core::fieldkit::{parse_expression, Field, XT_VARS};
use afdm_core::nageometry::*;
use proptest::prelude::*;

fn f(text: &str) -> Field {
    Field::expr(parse_expression(text, &XT_VARS).unwrap())
}

/// Off-diagonal d-metric with every coefficient depending on (x1, x2, t).
fn generic(a: f64, b: f64) -> DMetric {
    DMetric {
        g1: f(&format!("exp({a} * x1 * t) + 1")),
        g2: f("2 + sin(x2 + t)"),
        h3: f(&format!("1.5 + {b} * cos(x1 * x2) + 0.2 * t")),
        h4: f("-(1 + 0.3 * t^2 + 0.1 * x1)"),
        n1: f(&format!("{b} * x2 * t")),
        n2: f("0.2 * sin(x1 + t)"),
        w1: f("0.1 * x2 + 0.05 * t * x1"),
        w2: f(&format!("{a} * 0.2 * x1 * t")),
        omega: f("1 + 0.1 * x1 * t"),
    }
}

/// Coordinate metric from its block form, written out independently.
fn metric_oracle(m: &DMetric, p: [f64; 3]) -> [[f64; 4]; 4] {
    let [g1, g2, h3, h4, n1, n2, w1, w2, om] = m.sample(p).unwrap();
    let (v3, v4) = (om * om * h3, om * om * h4);
    let n = [n1, n2];
    let w = [w1, w2];
    let gd = [g1, g2];
    let mut g = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = if i == j { gd[i] } else { 0.0 } + n[i] * n[j] * v3 + w[i] * w[j] * v4;
        }
        g[i][2] = n[i] * v3;
        g[2][i] = n[i] * v3;
        g[i][3] = w[i] * v4;
        g[3][i] = w[i] * v4;
    }
    g[2][2] = v3;
    g[3][3] = v4;
    g
}

fn inv4(m: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut a = m;
    let mut r = [[0.0; 4]; 4];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for c in 0..4 {
        let p = (c..4).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(p, c);
        r.swap(p, c);
        let d = a[c][c];
        for k in 0..4 {
            a[c][k] /= d;
            r[c][k] /= d;
        }
        for row in 0..4 {
            if row != c {
                let fct = a[row][c];
                for k in 0..4 {
                    a[row][k] -= fct * a[c][k];
                    r[row][k] -= fct * r[c][k];
                }
            }
        }
    }
    r
}

fn shift(p: [f64; 3], mu: usize, h: f64) -> [f64; 3] {
    let mut q = p;
    match mu {
        0 => q[0] += h,
        1 => q[1] += h,
        3 => q[2] += h,
        _ => {}
    }
    q
}

/// Christoffel symbols from fourth-order central differences of the metric.
fn christoffel_fd(m: &DMetric, p: [f64; 3], h: f64) -> [[[f64; 4]; 4]; 4] {
    let mut dg = [[[0.0; 4]; 4]; 4];
    for mu in [0usize, 1, 3] {
        let gp = metric_oracle(m, shift(p, mu, h));
        let gm = metric_oracle(m, shift(p, mu, -h));
        let gp2 = metric_oracle(m, shift(p, mu, 2.0 * h));
        let gm2 = metric_oracle(m, shift(p, mu, -2.0 * h));
        for a in 0..4 {
            for b in 0..4 {
                dg[mu][a][b] = (8.0 * (gp[a][b] - gm[a][b]) - (gp2[a][b] - gm2[a][b])) / (12.0 * h);
            }
        }
    }
    let gi = inv4(metric_oracle(m, p));
    let mut out = [[[0.0; 4]; 4]; 4];
    for l in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                out[l][a][b] = (0..4).map(|s| 0.5 * gi[l][s] * (dg[a][s][b] + dg[b][s][a] - dg[s][a][b])).sum();
            }
        }
    }
    out
}

fn ricci_fd(m: &DMetric, p: [f64; 3]) -> [[f64; 4]; 4] {
    let h = 1e-3;
    let gam = christoffel_fd(m, p, h);
    let mut dgam = [[[[0.0; 4]; 4]; 4]; 4];
    for mu in [0usize, 1, 3] {
        let gp = christoffel_fd(m, shift(p, mu, h), h);
        let gm = christoffel_fd(m, shift(p, mu, -h), h);
        let gp2 = christoffel_fd(m, shift(p, mu, 2.0 * h), h);
        let gm2 = christoffel_fd(m, shift(p, mu, -2.0 * h), h);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    dgam[mu][a][b][c] =
                        (8.0 * (gp[a][b][c] - gm[a][b][c]) - (gp2[a][b][c] - gm2[a][b][c])) / (12.0 * h);
                }
            }
        }
    }
    let mut r = [[0.0; 4]; 4];
    for b in 0..4 {
        for d in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                s += dgam[a][a][b][d] - dgam[d][a][b][a];
                for l in 0..4 {
                    s += gam[a][a][l] * gam[l][b][d] - gam[a][d][l] * gam[l][b][a];
                }
            }
            r[b][d] = s;
        }
    }
    r
}

#[test]
fn coordinate_metric_matches_block_form() {
    let m = generic(0.3, 0.4);
    let p = [0.3, -0.2, 0.7];
    let g = coordinate_metric(&m, p).unwrap();
    let o = metric_oracle(&m, p);
    for a in 0..4 {
        for b in 0..4 {
            assert!((g[a][b] - o[a][b]).abs() < 1e-14);
        }
    }
}

#[test]
fn ricci_matches_finite_difference_oracle() {
    let m = generic(0.3, 0.4);
    let p = [0.3, -0.2, 0.7];
    let r = levi_civita_ricci(&m, p).unwrap();
    let o = ricci_fd(&m, p);
    for a in 0..4 {
        for b in 0..4 {
            assert!((r.ricci[a][b] - o[a][b]).abs() < 1e-6, "R[{a}][{b}] = {} vs {}", r.ricci[a][b], o[a][b]);
        }
    }
}

#[test]
fn de_sitter_is_einstein() {
    let h = 0.7;
    let m = DMetric::flrw(f(&format!("exp({h} * t)")));
    for p in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5]] {
        let r = levi_civita_ricci(&m, p).unwrap();
        assert!(r.residual(3.0 * h * h) < 1e-13, "{}", r.residual(3.0 * h * h));
        assert!((r.scalar - 12.0 * h * h).abs() < 1e-12);
    }
    let pts: Vec<_> = (0..5).map(|k| [0.1 * k as f64, 0.2, 0.3 * k as f64]).collect();
    let norms = einstein_residual(&m, 3.0 * h * h, &pts).unwrap();
    assert!(norms.sup < 1e-13 && norms.samples == 5);
}

#[test]
fn n_adapted_route_agrees_with_coordinates() {
    let m = generic(0.5, -0.3);
    let p = [0.4, 0.1, -0.3];
    let coord = levi_civita_ricci(&m, p).unwrap();
    let frame = levi_civita_ricci_nadapted(&m, p).unwrap();
    let mapped = frame_to_coordinate_mixed(&m, p, &frame.ricci_mixed).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            assert!((mapped[a][b] - coord.ricci_mixed[a][b]).abs() < 1e-11, "{a}{b}");
        }
    }
    assert!((frame.scalar - coord.scalar).abs() < 1e-11);
    assert!(coord.asymmetry() < 1e-11 && frame.asymmetry() < 1e-11);
}

#[test]
fn contracted_bianchi_vanishes() {
    let m = generic(0.2, 0.6);
    let div = contracted_bianchi(&m, [0.2, 0.3, 0.4]).unwrap();
    assert!(div.iter().all(|v| v.abs() < 1e-10), "{div:?}");
}

#[test]
fn frame_and_coframe_are_dual() {
    let m = generic(0.2, 0.6);
    assert!(frame_duality_error(&m, [0.5, -0.5, 1.0]).unwrap() < 1e-15);
}

#[test]
fn canonical_connection_is_metric_with_zero_hh_torsion() {
    let m = generic(0.3, 0.4);
    let p = [0.3, -0.2, 0.7];
    let rep = canonical_report(&m, p).unwrap();
    assert!(rep.nonmetricity < 1e-12, "{}", rep.nonmetricity);
    assert!(rep.distortion > 1e-3);
    for x in rep.torsion.t_hhh.iter().flatten().flatten() {
        assert!(x.abs() < 1e-13);
    }
    for x in rep.torsion.t_vvv.iter().flatten().flatten() {
        assert!(x.abs() < 1e-13);
    }
    assert!(rep.torsion.max_norm > 1e-3);
}

#[test]
fn torsion_families_match_general_formula() {
    let m = generic(0.3, 0.4);
    let p = [0.3, -0.2, 0.7];
    let rep = canonical_report(&m, p).unwrap();
    let g = rep.coefficients.gamma;
    // general torsion T^a_{bc} = Γ^a_{bc} − Γ^a_{cb} − W^a_{bc}; W from the anholonomy
    let an = anholonomy(&m, p).unwrap();
    let mut w = [[[0.0; 4]; 4]; 4];
    for i in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                w[2 + b][i][2 + a] = an.w_v[i][a][b];
                w[2 + b][2 + a][i] = -an.w_v[i][a][b];
            }
        }
    }
    for a in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                w[2 + a][i][j] = an.omega[a][j][i];
            }
        }
    }
    let t = |a: usize, b: usize, c: usize| g[a][b][c] - g[a][c][b] - w[a][b][c];
    let tr = &rep.torsion;
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                assert!((tr.t_hhh[x][y][z].abs() - t(x, y, z).abs()).abs() < 1e-12);
                assert!((tr.t_hhv[x][y][z].abs() - t(x, y, 2 + z).abs()).abs() < 1e-12);
                assert!((tr.t_vhh[x][y][z].abs() - t(2 + x, y, z).abs()).abs() < 1e-12);
                assert!((tr.t_vvh[x][y][z].abs() - t(2 + x, 2 + y, z).abs()).abs() < 1e-12);
                assert!((tr.t_vvv[x][y][z].abs() - t(2 + x, 2 + y, 2 + z).abs()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn anholonomy_of_linear_n_connection() {
    // N_1^3 = x2, N_2^3 = 0 gives Ω^3_{12} = e_2(N_1^3) − e_1(N_2^3) = 1.
    let mut m =
        DMetric::diagonal(Field::constant(1.0), Field::constant(1.0), Field::constant(1.0), Field::constant(-1.0));
    m.n1 = f("x2");
    m.w2 = f("t^2");
    let an = anholonomy(&m, [0.0, 0.0, 0.5]).unwrap();
    assert!((an.omega[0][0][1] - 1.0).abs() < 1e-15);
    assert!((an.omega[0][1][0] + 1.0).abs() < 1e-15);
    assert!((an.w_v[1][1][1] - 1.0).abs() < 1e-15);
    // Ω^4_{12} = e_2(0) − e_1(t²) = −(−N_1^4 ∂_t t²) = 0 since N_1^4 = 0.
    assert!(an.omega[1][0][1].abs() < 1e-15);
}

#[test]
fn levi_civita_for_holonomic_diagonal_metric_has_no_distortion() {
    // horizontal part depends on x only, vertical part on t only
    let m = DMetric::diagonal(f("exp(x1)"), f("1 + x1^2"), f("1 + t^2"), f("-exp(t)"));
    let rep = canonical_report(&m, [0.3, 0.2, 0.0]).unwrap();
    assert!(rep.distortion < 1e-14);
    assert!(rep.torsion.max_norm < 1e-14);
    assert!((rep.curvature.scalar - rep.lc_scalar).abs() < 1e-12);
}

#[test]
fn degenerate_and_non_lorentzian_metrics_are_rejected() {
    let m = DMetric::diagonal(Field::constant(1.0), Field::constant(0.0), Field::constant(1.0), Field::constant(-1.0));
    assert!(matches!(coordinate_metric(&m, [0.0; 3]), Err(GeometryError::Degenerate { .. })));
    assert!(matches!(levi_civita_ricci(&m, [0.0; 3]), Err(GeometryError::Degenerate { .. })));
    let e = DMetric::diagonal(Field::constant(1.0), Field::constant(1.0), Field::constant(1.0), Field::constant(1.0));
    assert!(matches!(check_lorentzian(&e, [0.0; 3]), Err(GeometryError::NotLorentzian { .. })));
    assert!(check_lorentzian(&generic(0.1, 0.1), [0.0; 3]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ricci_symmetric_and_bianchi_holds(a in -0.5f64..0.5, b in -0.5f64..0.5, x in -0.5f64..0.5, t in 0.0f64..0.8) {
        let m = generic(a, b);
        let p = [x, 0.3, t];
        let r = levi_civita_ricci(&m, p).unwrap();
        prop_assert!(r.asymmetry() < 1e-10);
        let div = contracted_bianchi(&m, p).unwrap();
        prop_assert!(div.iter().all(|v| v.abs() < 1e-9));
        let rep = canonical_report(&m, p).unwrap();
        prop_assert!(rep.nonmetricity < 1e-11);
    }
}
