use afdm_core::cosmodyn::LcdmSpec;
use afdm_core::fieldkit::{parse_expression, Field, XT_VARS};
use afdm_core::reconstruct::*;
use proptest::prelude::*;

fn z(text: &str) -> Field {
    Field::expr(parse_expression(text, &XT_VARS).unwrap())
}

fn gr() -> FModel {
    FModel::PowerLaw { c_plus: 1.0, c_minus: 0.0, m_plus: 1.0, m_minus: 0.0 }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Residual of the Gauss equation for (1 − X)^{−1/3} from its closed-form derivatives.
fn cube_root_gauss_residual(chi: (f64, f64, f64), x: f64) -> f64 {
    let u = 1.0 - x;
    let (f, d1, d2) = (u.powf(-1.0 / 3.0), u.powf(-4.0 / 3.0) / 3.0, 4.0 / 9.0 * u.powf(-7.0 / 3.0));
    x * (1.0 - x) * d2 + (chi.2 - (chi.0 + chi.1 + 1.0) * x) * d1 - chi.0 * chi.1 * f
}

#[test]
fn effective_source_examples() {
    let s = SourceSpec { lambda: 0.7, p: 0.3, kappa2: 2.0 };
    let v = effective_source(&gr(), &s, Invariants { r: 4.0 * 0.7, t: 1.0, p: 5.0 }).unwrap();
    assert!((v - 2.1).abs() < 1e-15);
    let constant = FModel::PowerLaw { c_plus: 1.4, c_minus: 0.0, m_plus: 0.0, m_minus: 0.0 };
    assert!(matches!(
        effective_source(&constant, &s, Invariants::curvature(1.0)),
        Err(ReconstructError::ZeroFirstDerivative(_))
    ));
    // f(R)-only form scales linearly with (f, Λ) at fixed ¹f
    let m = FModel::PowerLaw { c_plus: 1.0, c_minus: 0.2, m_plus: 1.0, m_minus: 0.0 };
    let m3 = FModel::PowerLaw { c_plus: 1.0, c_minus: 0.2 * 3.0 + 2.0 * 2.5, m_plus: 1.0, m_minus: 0.0 };
    let base = effective_source_fr(&m, 0.4, 2.5).unwrap();
    // f → 3f at R = 2.5 with ¹f = 1 fixed: R + 0.2 → R + 0.6 + 5 gives 3(2.5 + 0.2)
    assert!((effective_source_fr(&m3, 1.2, 2.5).unwrap() - 3.0 * base).abs() < 1e-14);
}

#[test]
fn effective_source_with_fgt_terms() {
    let m = FgtModel::new([0.3, 0.1, -0.2, 0.5], [0.2, 0.0, 0.1, -0.4], 0.8, 1.1, 1.5);
    let at = Invariants { r: 2.0, t: m.t0() * 1.3, p: m.p0() * 0.7 };
    let s = SourceSpec { lambda: 0.6, p: 0.2, kappa2: 1.5 };
    let v = FModel::Fgt(m).eval(at).unwrap();
    let h2 = 1.21;
    let (fv, fd) = fgt_derivative(&m, 0.7, FgtBranch::F).unwrap();
    let (gv, gd) = fgt_derivative(&m, 1.3, FgtBranch::G).unwrap();
    assert!((v.f - (2.0 + h2 * (fv + gv))).abs() < 1e-14);
    assert!((v.f3 - h2 * fd / m.p0()).abs() < 1e-14 && (v.f2 - h2 * gd / m.t0()).abs() < 1e-14);
    let want = 0.6 + v.f / 2.0 + (1.2 - 0.4 - 0.2) * v.f2 + 0.2 * 0.6 * v.f3;
    assert!((effective_source(&FModel::Fgt(m), &s, at).unwrap() - want).abs() < 1e-13);
}

#[test]
fn chi_constants_vieta() {
    let (a, b, c) = chi_constants();
    assert!((a + b + 1.0 / 6.0).abs() < 1e-15 && (a * b + 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(c, -0.5);
    let (a, b, c) = lcdm_chi_constants();
    assert!((a + b + 7.0 / 6.0).abs() < 1e-15 && (a * b + 1.0 / 6.0).abs() < 1e-15 && c == -0.5);
}

#[test]
fn hypergeometric_identities() {
    assert!((hyp2f1(1.0 / 3.0, 0.7, 0.7, 0.5).unwrap() - 0.5f64.powf(-1.0 / 3.0)).abs() < 1e-14);
    assert!((hyp2f1(1.0 / 3.0, 0.7, 0.7, 0.5).unwrap() - 1.259921049894873).abs() < 1e-12);
    assert_eq!(hyp2f1(0.3, -1.2, 2.5, 0.0).unwrap(), 1.0);
    // F(1, 1; 2; x) = −ln(1 − x)/x
    for x in [-0.8, -0.3, 0.2, 0.9] {
        assert!((hyp2f1(1.0, 1.0, 2.0, x).unwrap() + (1.0 - x).ln() / x).abs() < 1e-13);
    }
    let (a, b, c) = (0.4, -0.3, 1.7);
    let h = 1e-5;
    let fd = (hyp2f1(a, b, c, h).unwrap() - hyp2f1(a, b, c, -h).unwrap()) / (2.0 * h);
    assert!((fd - a * b / c).abs() < 1e-9);
    let (_, d1, _) = hyp2f1_derivatives(a, b, c, 0.0).unwrap();
    assert!((d1 - a * b / c).abs() < 1e-15);
    assert!(hyp2f1(a, b, c, 1.0).is_err() && hyp2f1(a, b, -2.0, 0.3).is_err());
}

#[test]
fn cube_root_solves_printed_gauss_equation() {
    for x in linspace(-0.9, 0.9, 37) {
        assert!(cube_root_gauss_residual(chi_constants(), x).abs() < 1e-12);
    }
    // it does not solve the reduced ΛCDM equation
    assert!(cube_root_gauss_residual(lcdm_chi_constants(), 0.5).abs() > 0.1);
}

#[test]
fn gauss_solution_series_matches_closed_form() {
    let (a, b, c) = chi_constants();
    let m = FModel::GaussSolution { a: 1.0, b: 0.0, chi: [a, b, c], h0: 0.5 };
    for x in [-0.5, 0.0, 0.4, 0.8] {
        let r = 3.0 * 0.25 * (x + 3.0);
        let v = m.eval(Invariants::curvature(r)).unwrap();
        let want = (1.0 - x).powf(-1.0 / 3.0);
        assert!((v.f - want).abs() < 1e-12);
        assert!((v.f1 - (1.0 - x).powf(-4.0 / 3.0) / 3.0 / 0.75).abs() < 1e-12);
    }
}

#[test]
fn second_branch_solves_gauss_equation() {
    let chi = [0.2, -0.7, 0.35];
    for x in [0.1, 0.5, 0.85] {
        let (f, d1, d2) = gauss_solution(0.0, 1.0, chi, x).unwrap();
        let res = x * (1.0 - x) * d2 + (chi[2] - (chi[0] + chi[1] + 1.0) * x) * d1 - chi[0] * chi[1] * f;
        assert!(res.abs() < 1e-11, "{res}");
    }
    assert!(gauss_solution(0.0, 1.0, chi, -0.2).is_err());
}

#[test]
fn gauss_ode_propagation_matches_closed_form() {
    let (a, b, c) = chi_constants();
    let x0 = 0.1;
    let ics = ((1.0f64 - x0).powf(-1.0 / 3.0), (1.0f64 - x0).powf(-4.0 / 3.0) / 3.0);
    let t = solve_linear_ode2(OdeKind::Gauss { chi: [a, b, c] }, Variable::R, x0, ics, 0.9, 81).unwrap();
    for (s, f) in t.s.iter().zip(&t.f) {
        assert!((f - (1.0 - s).powf(-1.0 / 3.0)).abs() < 1e-8);
    }
    let v = t.eval(0.9).unwrap();
    assert!((v.0 - 10f64.powf(1.0 / 3.0)).abs() < 1e-8);
    for s in [0.15, 0.5, 0.77] {
        assert!(t.ode_residual(s).unwrap() < 1e-8, "{}", t.ode_residual(s).unwrap());
    }
    assert!(matches!(
        solve_linear_ode2(OdeKind::Gauss { chi: [a, b, c] }, Variable::R, 0.5, (1.0, 0.0), 1.5, 10),
        Err(ReconstructError::SingularCrossing { .. })
    ));
}

#[test]
fn ode_solutions_superpose() {
    let kind = OdeKind::Euler { a: -1.3, b: 0.4 };
    let one = solve_linear_ode2(kind.clone(), Variable::R, 1.0, (1.0, 0.5), 3.0, 21).unwrap();
    let two = solve_linear_ode2(kind.clone(), Variable::R, 1.0, (-0.3, 2.0), 3.0, 21).unwrap();
    let sum = solve_linear_ode2(kind, Variable::R, 1.0, (0.7, 2.5), 3.0, 21).unwrap();
    for i in 0..21 {
        assert!((one.f[i] + two.f[i] - sum.f[i]).abs() < 1e-10);
        assert!((one.df[i] + two.df[i] - sum.df[i]).abs() < 1e-10);
    }
}

#[test]
fn custom_ode_kind() {
    // f'' + f = 0 written with expression coefficients
    let kind = OdeKind::Custom { p2: "1".into(), p1: "0".into(), p0: "1".into() };
    let t = solve_linear_ode2(kind, Variable::R, 0.0, (0.0, 1.0), 2.0, 11).unwrap();
    assert!((t.f[10] - 2f64.sin()).abs() < 1e-10);
    let bad = OdeKind::Custom { p2: "t - 1".into(), p1: "0".into(), p0: "1".into() };
    assert!(solve_linear_ode2(bad, Variable::R, 0.0, (0.0, 1.0), 2.0, 11).is_err());
}

#[test]
fn y_equation_and_variable_chain() {
    let (qs, qp) = (0.5, 2.0);
    let v = Variable::Y { q_s: qs, q_p: qp };
    let y0 = y_of_rhat(30.0, qs, qp);
    assert!((y0 + 900.0 / 576.0).abs() < 1e-14);
    let t = solve_linear_ode2(OdeKind::YEquation, v, y0, (1.0, 0.2), -0.2, 41).unwrap();
    let m = FModel::Tabulated(t.clone());
    // chain rule against finite differences in R
    let r = 20.0;
    let h = 1e-3;
    let fv = |r: f64| m.eval(Invariants::curvature(r)).unwrap().f;
    let val = m.eval(Invariants::curvature(r)).unwrap();
    let d1 = (fv(r - 2.0 * h) - 8.0 * fv(r - h) + 8.0 * fv(r + h) - fv(r + 2.0 * h)) / (12.0 * h);
    let d2 = (-fv(r - 2.0 * h) + 16.0 * fv(r - h) - 30.0 * fv(r) + 16.0 * fv(r + h) - fv(r + 2.0 * h)) / (12.0 * h * h);
    assert!((val.f1 - d1).abs() < 1e-8 * val.f1.abs().max(1.0));
    assert!((val.f11 - d2).abs() < 1e-5 * val.f11.abs().max(1.0), "{} {}", val.f11, d2);
    assert!(t.ode_residual(-0.8).unwrap() < 1e-8);
}

#[test]
fn euler_examples() {
    let e = euler_reconstruct(-1.1, H0Convention::Inverse).unwrap();
    assert!((e.h0 + 10.0 / 3.0).abs() < 1e-13);
    assert!((e.a + 70.0 / 9.0).abs() < 1e-12 && (e.b + 17.0 / 6.0).abs() < 1e-12);
    let IndicialRoots::Real { plus, minus } = e.roots else { panic!("real roots expected") };
    assert!((plus - 9.0895).abs() < 1e-4 && (minus + 0.3117).abs() < 1e-4);
    assert!(indicial_residual(e.a, e.b, plus).abs() < 1e-12 && indicial_residual(e.a, e.b, minus).abs() < 1e-12);
    let e = euler_reconstruct(-5.0 / 3.0, H0Convention::Inverse).unwrap();
    assert!((e.h0 + 0.5).abs() < 1e-15 && (e.a - 0.25).abs() < 1e-15 && e.b.abs() < 1e-15);
    let IndicialRoots::Real { plus, minus } = e.roots else { panic!() };
    assert!((plus - 0.75).abs() < 1e-15 && minus.abs() < 1e-15);
    assert!(matches!(euler_reconstruct(-1.0, H0Convention::Inverse), Err(ReconstructError::PhantomDivide)));
    let lin = euler_reconstruct(-1.1, H0Convention::Linear).unwrap();
    assert!((lin.h0 + 0.1 / 3.0).abs() < 1e-15);
}

#[test]
fn euler_complex_roots_are_reported() {
    // H0 = 1 (linear, w = 2): A = −2, B = 3/2, (1 − A)² − 4B = 3 > 0; H0 = −0.4: A = 0.24, B = 0.1
    let e = euler_reconstruct(-2.2, H0Convention::Linear).unwrap();
    let disc = (1.0 - e.a).powi(2) - 4.0 * e.b;
    match e.roots {
        IndicialRoots::Complex { re, im } => {
            assert!(disc < 0.0 && (re - (1.0 - e.a) / 2.0).abs() < 1e-15 && (im - (-disc).sqrt() / 2.0).abs() < 1e-15);
            assert!(e.model.is_none());
        }
        IndicialRoots::Real { .. } => assert!(disc >= 0.0),
    }
}

#[test]
fn rip_scale_factor() {
    let e = euler_reconstruct(-1.1, H0Convention::Inverse).unwrap();
    for t in linspace(-3.0, 0.99, 20) {
        assert!((e.rip.hubble(t) * (e.rip.t_s - t) - e.h0).abs() < 1e-12);
        let h = 1e-6;
        let dl = ((e.rip.scale(t + h)).ln() - (e.rip.scale(t - h)).ln()) / (2.0 * h);
        assert!((dl - e.rip.hubble(t)).abs() < 1e-5 * e.rip.hubble(t).abs().max(1.0));
    }
}

#[test]
fn power_law_solves_euler_equation() {
    let e = euler_reconstruct(-1.1, H0Convention::Inverse).unwrap();
    let m = e.model.unwrap();
    for r in [0.3, 1.0, 2.7, 11.0] {
        let v = m.eval(Invariants::curvature(r)).unwrap();
        let res = r * r * v.f11 + e.a * r * v.f1 + e.b * v.f;
        assert!(res.abs() < 1e-12 * (r * r * v.f11).abs().max(1.0), "{res}");
    }
}

#[test]
fn f1gen_lcdm_with_derived_constants_passes() {
    let s = LcdmSpec { h0: 0.8, rho0: 1.3, a0: 1.0, kappa2: 1.0 };
    let q = lcdm_q_field(&s);
    let m = lcdm_model(&s, lcdm_chi_constants(), 0.0, 3.0, 61).unwrap();
    let pts = f1gen_scan(&m, &q, &F1genMatter::none(), &linspace(0.0, 3.0, 31)).unwrap();
    let worst = pts.iter().map(|p| p.residual).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    let printed = lcdm_model(&s, chi_constants(), 0.0, 3.0, 61).unwrap();
    let pts = f1gen_scan(&printed, &q, &F1genMatter::none(), &linspace(0.0, 3.0, 31)).unwrap();
    assert!(pts.iter().map(|p| p.residual).fold(0.0, f64::max) > 1e-2);
}

#[test]
fn f1gen_gr_and_trivial_cases() {
    // f = R on q = H0²: f = 12H0², rhs = 6H0² · 1
    let q = Field::constant(0.49);
    let m = gr();
    let dq = z("0.49 + 0.01 * exp(-3 * t)");
    let p = f1gen_residual(&m, &dq, &F1genMatter::none(), 0.5).unwrap();
    assert!(p.residual > 0.1);
    assert!(matches!(f1gen_residual(&m, &q, &F1genMatter::none(), 0.5), Err(ReconstructError::NonMonotone(_))));
    let zero = FModel::PowerLaw { c_plus: 0.0, c_minus: 0.0, m_plus: 1.0, m_minus: 2.0 };
    assert_eq!(f1gen_residual(&zero, &dq, &F1genMatter::none(), 0.5).unwrap().residual, 0.0);
}

#[test]
fn fgt_examples() {
    let m = FgtModel::new([0.4, -0.3, 0.2, 1.1], [0.0; 4], 0.25, 1.0, 1.0);
    assert!((fgt_eval(&m, 1.0, FgtBranch::F).unwrap() - (0.4 - 0.3 + 1.1 + 0.75)).abs() < 1e-15);
    let lin = FgtModel::new([0.0; 4], [0.0; 4], 1.0, 1.0, 1.0);
    for x in [0.5, 2.0, 7.0] {
        assert!((fgt_eval(&lin, x, FgtBranch::F).unwrap() - 3.0 * x).abs() < 1e-15);
        assert!((fgt_eval(&lin, x, FgtBranch::G).unwrap() + 3.0 * x).abs() < 1e-15);
    }
    assert!(fgt_eval(&m, 0.0, FgtBranch::F).is_err());
    for x in [0.3, 1.0, 4.0] {
        let h = 1e-6;
        let fd = (fgt_eval(&m, x + h, FgtBranch::F).unwrap() - fgt_eval(&m, x - h, FgtBranch::F).unwrap()) / (2.0 * h);
        assert!((fgt_derivative(&m, x, FgtBranch::F).unwrap().1 - fd).abs() < 1e-8);
    }
}

#[test]
fn characteristic_roots_are_derived_not_printed() {
    for b in derived_fgt_exponents() {
        assert!(ds_characteristic_cubic(b).abs() < 1e-14);
    }
    let cmp = compare_fgt_exponents(0.01);
    assert!(cmp.max_mismatch > 0.01);
    assert_eq!(cmp.adopted, RootChoice::Derived);
}

/// ς = (1+z)^k plus the particular dust response, F fixed by the first equation.
fn ds_inputs(k: f64) -> CeqInputs {
    let (h0, kappa2, rho0) = (0.9, 1.0, 0.6);
    let sp = -kappa2 * rho0 / (4.5 * h0 * h0);
    let varsigma = z(&format!("(1 + t)^{k} + {sp} * (1 + t)^3"));
    let rho = z(&format!("{rho0} * (1 + t)^3"));
    let f = 2.0 * &(&(&(4.5 * h0 * h0 * &varsigma) + &(kappa2 * &rho)) - 3.0 * h0 * h0);
    CeqInputs { f, g: Field::constant(0.0), h: Field::constant(h0), rho, varsigma, kappa2, g1: 0.0 }
}

#[test]
fn ds_reduction_confirms_derived_roots() {
    for b in &derived_fgt_exponents()[..2] {
        let c = ds_inputs(3.0 * b);
        for zz in [0.0, 0.5, 1.5] {
            let r = ceq_residual(&c, zz).unwrap();
            assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-9, "{r:?}");
        }
    }
    // the printed real exponent fails the second equation
    let c = ds_inputs(3.0 * PRINTED_B[0]);
    assert!(ceq_residual(&c, 0.5).unwrap()[1].abs() > 1e-2);
}

#[test]
fn ceq_gr_reduction() {
    // matter only: H² = H0²(1+z)³, κ²ρ = 3H²
    let c = CeqInputs {
        f: Field::constant(0.0),
        g: Field::constant(0.0),
        h: z("0.7 * (1 + t)^1.5"),
        rho: z("3 * 0.49 * (1 + t)^3"),
        varsigma: Field::constant(0.0),
        kappa2: 1.0,
        g1: 0.0,
    };
    for zz in linspace(0.0, 3.0, 7) {
        let r = ceq_residual(&c, zz).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
    }
    // ΛCDM with the cosmological term carried by G = −6H_Λ²
    let c = CeqInputs {
        g: Field::constant(-6.0 * 0.36),
        h: z("sqrt(0.36 + 0.2 * (1 + t)^3)"),
        rho: z("0.6 * (1 + t)^3"),
        ..c
    };
    for zz in linspace(0.0, 3.0, 7) {
        let r = ceq_residual(&c, zz).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
    }
}

#[test]
fn ceq_sentinel_and_fgt_regression() {
    let zero = Field::constant(0.0);
    let c = CeqInputs {
        f: zero.clone(),
        g: zero.clone(),
        h: Field::constant(0.5),
        rho: zero.clone(),
        varsigma: zero,
        kappa2: 1.0,
        g1: 0.0,
    };
    let r = ceq_residual(&c, 0.4).unwrap();
    assert_eq!(r, [0.75, -0.75, 0.0]);
    let m = FgtModel::new([0.1, 0.2, -0.1, 0.3], [0.05, 0.1, 0.0, -0.2], 0.4, 0.9, 1.0);
    let inputs = fgt_ceq_inputs(&m);
    // P̌ = (1+z)³ on the background
    let fz = inputs.f.value([0.0, 0.0, 0.7]).unwrap();
    assert!((fz - 0.81 * fgt_eval(&m, 1.7f64.powi(3), FgtBranch::F).unwrap()).abs() < 1e-12);
    let r = ceq_residual(&inputs, 0.7).unwrap();
    assert!(r.iter().all(|v| v.is_finite()));
    assert!(ceq_residual(&CeqInputs { h: Field::constant(0.0), ..inputs }, 0.1).is_err());
}

#[test]
fn fmodel_serialises_as_tagged_document() {
    let m = FModel::GaussSolution { a: 1.0, b: 0.5, chi: [0.1, 0.2, 0.3], h0: 0.7 };
    let text = serde_json::to_string(&m).unwrap();
    assert!(text.contains("\"variant\":\"GaussSolution\""));
    assert_eq!(serde_json::from_str::<FModel>(&text).unwrap(), m);
}

proptest! {
    #[test]
    fn hyp2f1_reduces_to_binomial(a in -2.0f64..2.0, b in 0.1f64..3.0, x in -0.9f64..0.9) {
        let v = hyp2f1(a, b, b, x).unwrap();
        prop_assert!((v - (1.0 - x).powf(-a)).abs() < 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn euler_indicial_identity(w in -3.0f64..-1.01) {
        let e = euler_reconstruct(w, H0Convention::Inverse).unwrap();
        if let IndicialRoots::Real { plus, minus } = e.roots {
            let scale = plus.abs().max(minus.abs()).max(1.0).powi(2);
            prop_assert!(indicial_residual(e.a, e.b, plus).abs() < 1e-12 * scale);
            prop_assert!(indicial_residual(e.a, e.b, minus).abs() < 1e-12 * scale);
        }
    }
}
