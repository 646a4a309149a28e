#![allow(clippy::needless_range_loop)]

use afdm_core::afdm::*;
use afdm_core::fieldkit::{parse_expression, Axis, Field, Grid3, XT_VARS};
use afdm_core::nageometry::{canonical_dtorsion, einstein_residual, levi_civita_ricci};
use proptest::prelude::*;

fn f(text: &str) -> Field {
    Field::expr(parse_expression(text, &XT_VARS).unwrap())
}

fn grid(n: usize) -> Grid3 {
    Grid3::new(Axis::new(0.2, 0.8, n), Axis::new(0.2, 0.8, n), Axis::new(0.1, 0.9, n)).unwrap()
}

fn exponential_lc(lambda: f64, psi: Field) -> GeneratingData {
    GeneratingData::new(psi, Generating::PhiCheck(f("exp(x1 + x2 + t)")), lambda)
}

fn liouville_psi(lambda: f64) -> Field {
    // e^ψ = 4/(|Λ|(1 ± r²)²): constant Gauss curvature Λ
    let s = if lambda > 0.0 { "+" } else { "-" };
    f(&format!("ln(4 / {}) - 2 * ln(1 {s} x1^2 {s} x2^2)", lambda.abs()))
}

fn torsionful_data(n2: f64) -> GeneratingData {
    let mut g = GeneratingData::new(f("x1^2 * x2"), Generating::PhiHat(f("exp(0.8 * t + 0.3 * x1 - 0.2 * x2)")), 1.3);
    g.h_upsilon = f("x2");
    g.v_upsilon = f("1.5 + 0.2 * sin(t + x1)");
    g.n1fun = [f("0.3 * x2"), f("x1 * x2")];
    g.n2fun = [Field::constant(n2), Field::constant(0.5 * n2)];
    g
}

#[test]
fn redefinition_with_constant_source_is_identity() {
    let g = grid(5);
    let hat = f("exp(0.5 * t + x1)");
    let r = redefine_generating(&hat, &Field::constant(2.0), 2.0, &g, Direction::Forward).unwrap();
    for p in g.points() {
        assert!((r.field.value(p).unwrap() - hat.value(p).unwrap()).abs() < 1e-14);
    }
    assert!(r.relation_residual < 1e-12);
}

#[test]
fn redefinition_matches_closed_form() {
    let (lam, mu, big) = (0.7, 0.4, 1.5);
    let g = Grid3::new(Axis::new(0.2, 0.8, 4), Axis::new(0.2, 0.8, 4), Axis::new(0.1, 0.9, 65)).unwrap();
    let r = redefine_generating(
        &f(&format!("exp({lam} * t)")),
        &f(&format!("{big} * exp({mu} * t)")),
        big,
        &g,
        Direction::Forward,
    )
    .unwrap();
    let s = 2.0 * lam + mu;
    let t0 = g.t.lo;
    for p in g.points() {
        let want = (2.0 * lam / s) * (s * p[2]).exp() + (mu / s) * (s * t0).exp();
        assert!((r.field.value(p).unwrap().powi(2) - want).abs() < 1e-12 * want);
    }
    assert!(r.relation_residual < 1e-10 && r.grid_crosscheck < 1e-7, "{} {}", r.relation_residual, r.grid_crosscheck);
}

#[test]
fn sign_mismatch_is_rejected() {
    let err = redefine_generating(&f("exp(t)"), &Field::constant(1.0), -1.0, &grid(4), Direction::Forward).unwrap_err();
    assert!(matches!(err, AfdmError::NegativeRadicand { .. }));
    let err = redefine_generating(&f("exp(t)"), &f("t - 0.5"), 1.0, &grid(5), Direction::Forward).unwrap_err();
    assert!(matches!(err, AfdmError::ZeroSource { .. } | AfdmError::NegativeRadicand { .. }));
}

#[test]
fn exponential_coefficients_by_hand() {
    for lambda in [1.0, -1.0, 2.5] {
        let g = exponential_lc(lambda, Field::constant(0.0));
        let c = build_coefficients(&g, &grid(4)).unwrap();
        let p = [0.3, 0.6, 0.4];
        let phi2 = (0.3f64 + 0.6 + 0.4).exp().powi(2);
        assert!((c.h3.value(p).unwrap() - lambda.signum() * phi2 / (4.0 * lambda.abs())).abs() < 1e-12);
        assert!((c.h4.value(p).unwrap() + 1.0 / lambda).abs() < 1e-12);
        assert!((c.w[0].value(p).unwrap() - 1.0).abs() < 1e-14);
        assert!((c.w[1].value(p).unwrap() - 1.0).abs() < 1e-14);
        // printed closed form: Φ̂^◇/(4ΛΦ̂) differs from the chain form
        assert!((c.h4_printed.value(p).unwrap() - 1.0 / (4.0 * lambda.abs())).abs() < 1e-12);
    }
}

#[test]
fn constant_generating_function_is_rejected() {
    let g = GeneratingData::new(Field::constant(0.0), Generating::PhiCheck(Field::constant(2.0)), 1.0);
    assert!(matches!(build_coefficients(&g, &grid(4)), Err(AfdmError::ZeroTimeDerivative { .. })));
}

#[test]
fn zero_second_integration_function_keeps_first() {
    let mut g = torsionful_data(0.0);
    g.n1fun = [f("sin(x1)"), f("x2^3")];
    let c = build_coefficients(&g, &grid(4)).unwrap();
    let p = [0.5, 0.3, 0.7];
    assert!((c.n[0].value(p).unwrap() - 0.5f64.sin()).abs() < 1e-15);
    assert!((c.n[1].value(p).unwrap() - 0.027).abs() < 1e-15);
}

#[test]
fn lc_exponential_family_passes_lc_conditions_and_residuals() {
    for lambda in [1.0, -1.0] {
        let g = exponential_lc(lambda, f(&format!("{} * (x1^2 + x2^2)", lambda / 2.0)));
        let gr = grid(5);
        let s = assemble_lc(&g, &gr).unwrap();
        let pts = gr.points();
        let lc = check_lc(&s.metric, &pts).unwrap();
        assert!(lc.pass(), "{lc:?}");
        let (hu, vu) = s.sources();
        let res = system_residuals(&s, (&hu, &vu), &pts).unwrap();
        assert!(res.max() < 1e-10, "{res:?}");
        for p in pts.iter().step_by(17) {
            assert!(canonical_dtorsion(&s.metric, *p).unwrap().max_norm < 1e-8);
        }
    }
}

#[test]
fn lc_exponential_ricci_blocks() {
    // The v-block is 2-D (anti-)de Sitter with curvature Λ; the h-block is
    // conformally flat with Gauss curvature −½e^{−ψ}Δψ = −Λe^{−ψ}.
    for lambda in [1.0, -1.0] {
        let g = exponential_lc(lambda, f(&format!("{} * (x1^2 + x2^2)", lambda / 2.0)));
        let s = assemble_lc(&g, &grid(4)).unwrap();
        let p = [0.4, 0.5, 0.3];
        let r = levi_civita_ricci(&s.metric, p).unwrap();
        let psi = lambda / 2.0 * (0.16 + 0.25);
        let k = -lambda * (-psi).exp();
        // mixed Ricci in coordinates: trace over the h- and v-blocks
        let h_trace = r.ricci_mixed[0][0] + r.ricci_mixed[1][1];
        let v_trace = r.ricci_mixed[2][2] + r.ricci_mixed[3][3];
        assert!((h_trace - 2.0 * k).abs() < 1e-10, "{h_trace} vs {}", 2.0 * k);
        assert!((v_trace - 2.0 * lambda).abs() < 1e-10);
    }
}

#[test]
fn lc_with_liouville_psi_is_einstein() {
    for lambda in [1.0, -1.0] {
        let g = exponential_lc(lambda, liouville_psi(lambda));
        let gr = Grid3::new(Axis::new(-0.4, 0.4, 6), Axis::new(-0.4, 0.4, 6), Axis::new(0.0, 1.0, 6)).unwrap();
        let s = assemble_lc(&g, &gr).unwrap();
        let res = einstein_residual(&s.metric, lambda, &gr.points()).unwrap();
        assert!(res.sup < 1e-9, "{}", res.sup);
    }
}

#[test]
fn curl_of_w_is_detected() {
    let gr = Grid3::new(Axis::new(0.5, 1.0, 4), Axis::new(0.5, 1.0, 4), Axis::new(0.5, 1.0, 4)).unwrap();
    let g = GeneratingData::new(Field::constant(0.0), Generating::PhiCheck(f("exp(x1 * t + x2 * t^2)")), 1.0);
    assert!(matches!(assemble_lc(&g, &gr), Err(AfdmError::NotCurlFree { .. })));
    // e^{x1² t} has w = (2t/x1, 0), which is curl-free
    let g = GeneratingData::new(Field::constant(0.0), Generating::PhiCheck(f("exp(x1^2 * t)")), 1.0);
    assert!(assemble_lc(&g, &gr).is_ok());
}

#[test]
fn lc_branch_requires_phi_check() {
    let g = torsionful_data(0.0);
    assert!(matches!(assemble_lc(&g, &grid(4)), Err(AfdmError::NeedsPhiCheck)));
}

#[test]
fn separable_potential_matches_closed_form() {
    // Φ̌ = X T with X = 1 + x1² + x2, T = e^{2t}: w_i = ∂_i ln X / 2, Ã = ln X / 2
    let g = GeneratingData::new(Field::constant(0.0), Generating::PhiCheck(f("(1 + x1^2 + x2) * exp(2 * t)")), 1.0);
    let gr = grid(5);
    let s = assemble_lc(&g, &gr).unwrap();
    let pot = line_potential(&s.coefficients.w, &gr).unwrap();
    assert!(pot.path_discrepancy < 1e-12);
    let base = (1.0f64 + 0.04 + 0.2).ln() / 2.0;
    for idx in 0..gr.len() {
        let [x, y, _] = gr.point(idx);
        let want = (1.0 + x * x + y).ln() / 2.0 - base;
        assert!((pot.values.values[idx] - want).abs() < 1e-12);
    }
}

#[test]
fn torsionful_matches_lc_when_source_is_lambda() {
    let gr = grid(4);
    let mut tors = GeneratingData::new(f("x1 * x2"), Generating::PhiHat(f("exp(x1 - x2 + 0.7 * t)")), 1.0);
    tors.h_upsilon = Field::constant(1.0);
    let n = f("x1^2 * x2");
    tors.n1fun = [n.partial(0), n.partial(1)];
    let mut lc = GeneratingData::new(f("x1 * x2"), Generating::PhiCheck(f("exp(x1 - x2 + 0.7 * t)")), 1.0);
    lc.n_potential = Some(n);
    let a = assemble_torsionful(&tors, &gr).unwrap();
    let b = assemble_lc(&lc, &gr).unwrap();
    for p in gr.points() {
        let (x, y) = (a.metric.sample(p).unwrap(), b.metric.sample(p).unwrap());
        for k in 0..9 {
            assert!((x[k] - y[k]).abs() < 1e-8 * x[k].abs().max(1.0), "{k}: {} vs {}", x[k], y[k]);
        }
    }
}

#[test]
fn torsionful_branch_residuals_and_torsion() {
    let gr = grid(4);
    let s = assemble_torsionful(&torsionful_data(1.0), &gr).unwrap();
    let pts = gr.points();
    let (hu, vu) = s.sources();
    let res = system_residuals(&s, (&hu, &vu), &pts).unwrap();
    assert!(res.max() < 1e-8, "{res:?}");
    let tors = canonical_dtorsion(&s.metric, [0.5, 0.5, 0.5]).unwrap();
    assert!(tors.max_norm > 1e-3);
    let lc = check_lc(&s.metric, &pts).unwrap();
    assert!(lc.n_evolution > 1e-3 && !lc.pass());
}

#[test]
fn perturbed_h3_is_detected_by_eq2m() {
    let gr = grid(4);
    let s = assemble_torsionful(&torsionful_data(0.0), &gr).unwrap();
    let mut m = s.metric.clone();
    m.h3 = &m.h3 * &(1.0 + &(0.01 * &Field::coordinate(2).sin()));
    let (hu, vu) = s.sources();
    let res =
        afdm_core::afdm::system_residuals(&AfdmSolution { metric: m, ..s.clone() }, (&hu, &vu), &gr.points()).unwrap();
    assert!(res.eq2m > 1e-3, "{}", res.eq2m);
}

#[test]
fn inverse_h4_mode_gives_unit_time_block() {
    let mut g = torsionful_data(0.0);
    g.omega_mode = OmegaMode::InverseH4;
    let s = assemble_torsionful(&g, &grid(4)).unwrap();
    let p = [0.3, 0.4, 0.5];
    let v = s.metric.sample(p).unwrap();
    assert!((v[8] * v[8] * v[3] + 1.0).abs() < 1e-12);
    let h3_hat = s.polarizations.h3_hat.value(p).unwrap();
    assert!((h3_hat - v[8] * v[8] * v[2]).abs() < 1e-12);
}

#[test]
fn epsilon_family_properties() {
    let mut g = exponential_lc(1.0, Field::constant(0.0));
    g.a_factor = f("exp(0.3 * t)");
    let base = assemble_lc(&g, &grid(4)).unwrap();
    let chi = f("sin(t)");
    let nc = [f("x2"), f("t")];
    let wc = [f("t^2"), f("x1")];
    let p = [0.3, 0.4, 0.5];
    let a2 = (0.6f64 * 0.5).exp();
    let m0 = epsilon_family(&base, 0.0, &chi, &nc, &wc).sample(p).unwrap();
    for (x, y) in m0.iter().zip([a2, a2, a2, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0]) {
        assert!((x - y).abs() < 1e-14);
    }
    let m1 = epsilon_family(&base, 0.01, &chi, &nc, &wc).sample(p).unwrap();
    let m2 = epsilon_family(&base, 0.02, &chi, &nc, &wc).sample(p).unwrap();
    for k in 0..9 {
        assert!(((m2[k] - m1[k]) - (m1[k] - m0[k])).abs() < 1e-15);
    }
    assert!((m1[2] - a2 * (1.0 + 0.01 * 0.5f64.sin())).abs() < 1e-15);
}

#[test]
fn metric_csv_has_header_and_rows() {
    let g = exponential_lc(1.0, Field::constant(0.0));
    let gr = grid(4);
    let s = assemble_lc(&g, &gr).unwrap();
    let csv = metric_csv(&s.metric, &gr).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "x1,x2,t,g1,g2,h3,h4,n1,n2,w1,w2,omega");
    assert_eq!(lines.len(), 1 + gr.len());
}

#[test]
fn n_formula_identity_for_arbitrary_h() {
    let pts = grid(4).points();
    let r = n_formula_residual(&f("2 + sin(x1 * t) + t^2"), &f("-(1 + x2 * t^3)"), &f("x1"), &f("1 + x2"), 0.1, &pts)
        .unwrap();
    assert!(r < 1e-8, "{r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn redefinition_roundtrip(a in 0.3f64..1.2, b in -0.5f64..0.5, c in 0.05f64..0.3, lam in 0.5f64..2.0) {
        let gr = grid(4);
        let hat = f(&format!("exp({a} * t + {b} * x1)"));
        let ups = f(&format!("{lam} * (1 + {c} * sin(t + x2))"));
        let fwd = redefine_generating(&hat, &ups, lam, &gr, Direction::Forward).unwrap();
        let back = redefine_generating(&fwd.field, &ups, lam, &gr, Direction::Inverse).unwrap();
        for p in gr.points() {
            let (x, y) = (hat.value(p).unwrap(), back.field.value(p).unwrap());
            prop_assert!((x - y).abs() < 1e-6 * x.abs().max(1.0));
        }
        prop_assert!(fwd.relation_residual < 1e-9 && back.relation_residual < 1e-9);
    }

    #[test]
    fn w_annihilates_generating_function(a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.5f64..1.5) {
        let phi = f(&format!("exp({c} * t + {a} * x1 * t) * (2 + sin({b} * x2 + t))"));
        let w = [&phi.partial(0) / &phi.partial(2), &phi.partial(1) / &phi.partial(2)];
        let p = [0.3, 0.2, 0.4];
        let j = phi.jet(p, 1).unwrap();
        if j.derivative(2).value().abs() > 1e-3 {
            for i in 0..2 {
                let v = j.derivative(i).value() - w[i].value(p).unwrap() * j.derivative(2).value();
                prop_assert!(v.abs() < 1e-12 * j.value().abs().max(1.0));
            }
        }
    }
}
