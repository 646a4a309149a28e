use afdm_core::cosmodyn::*;
use afdm_core::fieldkit::Trajectory;
use proptest::prelude::*;

fn traj(t: &[f64], a: impl Fn(f64) -> f64, h: impl Fn(f64) -> f64) -> Trajectory {
    Trajectory::new(vec!["a".into(), "H".into()], t.to_vec(), t.iter().map(|&s| vec![a(s), h(s)]).collect()).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn big_rip_values() {
    assert!((big_rip_hubble(-4.0 / 3.0, 1.0, 0.0).unwrap() + 2.0).abs() < 1e-14);
    assert!((big_rip_hubble(-4.0 / 3.0, 1.0, 0.5).unwrap() + 4.0).abs() < 1e-14);
    assert_eq!(big_rip_hubble(-4.0 / 3.0, 1.0, 1.0), Err(CosmoError::Singularity));
    assert!(big_rip_hubble(-0.5, 1.0, 0.0).is_err());
    let c0 = big_rip_hubble(-1.5, 2.0, 0.0).unwrap() * 2.0;
    for t in linspace(0.0, 1.99, 50) {
        let h = big_rip_hubble(-1.5, 2.0, t).unwrap();
        assert!((h * (2.0 - t) - c0).abs() < 1e-12);
    }
}

#[test]
fn big_rip_exponent_from_integration() {
    for varpi in [-4.0 / 3.0, -1.2, -2.0] {
        let fit = big_rip_fit(varpi, 0.7).unwrap();
        assert!((fit.exponent + 1.0).abs() < 0.01, "{}", fit.exponent);
        assert!(fit.law_residual < 1e-6, "{}", fit.law_residual);
    }
}

#[test]
fn fixed_point_is_algebraically_consistent() {
    let f = FluidSpec::new(-4.0 / 3.0, 1.0, 1.0, 1.0, 1.0);
    assert!((f.fixed_point_hubble() - 1.0).abs() < 1e-15);
    let (de, dm) = f.fixed_point_densities();
    assert!((dm / de - 1.0 / 3.0).abs() < 1e-15);
    let h = (f.kappa2 * (de + dm) / 3.0).sqrt();
    assert!((h - 1.0).abs() < 1e-14);
    let (r1, r2) = f.conservation_residuals(h, de, dm, 0.0, 0.0);
    assert!(r1.abs() < 1e-14 && r2.abs() < 1e-14);
    // with the printed source the printed ratio is not a fixed point
    let printed = FluidSpec { source: CouplingSource::Printed, ..f };
    let (_, r2) = printed.conservation_residuals(1.0, de, (1.0 + f.varpi) * de, 0.0, 0.0);
    assert!(r2.abs() > 0.1);
}

#[test]
fn fixed_point_is_a_saddle() {
    for (varpi, q) in [(-4.0 / 3.0, 1.0), (-1.5, 0.5), (-2.0, 2.0)] {
        let f = FluidSpec::new(varpi, q, 1.0, 1.0, 1.0);
        let (de, dm) = f.fixed_point_densities();
        let j = dedm_jacobian(&f, de, dm);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!(det < 0.0, "{det}");
    }
    // hand-linearised value at ϖ = −4/3, Q = 1, κ² = 1: det = −96/64
    let f = FluidSpec::new(-4.0 / 3.0, 1.0, 1.0, 1.0, 1.0);
    let (de, dm) = f.fixed_point_densities();
    let j = dedm_jacobian(&f, de, dm);
    assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] + 1.5).abs() < 1e-12);
}

#[test]
fn start_at_fixed_point_stays_there() {
    let mut f = FluidSpec::new(-4.0 / 3.0, 1.0, 1.0, 1.0, 1.0);
    let (de, dm) = f.fixed_point_densities();
    f.rho0_de = de;
    f.rho0_dm = dm;
    let run = evolve_coupled_dedm(&f, 1.0, (0.0, 5.0), 101).unwrap();
    assert!(run.report.converged, "{:?}", run.report);
    assert!((run.report.final_hubble - 1.0).abs() < 1e-8);
    assert!((run.report.final_ratio - run.report.fixed_point_ratio).abs() < 1e-8);
}

#[test]
fn perturbed_fixed_point_leaves() {
    let mut f = FluidSpec::new(-4.0 / 3.0, 1.0, 1.0, 1.0, 1.0);
    let (de, dm) = f.fixed_point_densities();
    f.rho0_de = de * 1.05;
    f.rho0_dm = dm;
    let run = evolve_coupled_dedm(&f, 1.0, (0.0, 30.0), 301).unwrap();
    assert!(run.report.singular.is_some() || (run.report.final_hubble - 1.0).abs() > 0.01, "{:?}", run.report);
}

#[test]
fn bookkeeping_and_second_friedmann_hold_along_trajectories() {
    let f = FluidSpec::new(-4.0 / 3.0, 1.0, 2.0, 0.5, 1.0);
    let run = evolve_coupled_dedm(&f, 1.0, (0.0, 3.0), 61).unwrap();
    let tr = &run.trajectory;
    for name in ["residual1", "residual2"] {
        let m = tr.column(name).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(m < 1e-7, "{name}: {m}");
    }
    // the printed source breaks total conservation: second equation fails
    let printed = FluidSpec { source: CouplingSource::Printed, ..f };
    let run = evolve_coupled_dedm(&printed, 1.0, (0.0, 1.0), 21).unwrap();
    let m = run.trajectory.column("residual2").unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(m > 1e-3);
}

#[test]
fn uncoupled_scaling_exponents() {
    for varpi in [-4.0 / 3.0, -0.5, 0.0] {
        let f = FluidSpec::new(varpi, 0.0, 1.0, 2.0, 1.0);
        let run = evolve_coupled_dedm(&f, 1.0, (0.0, 0.8), 41).unwrap();
        let tr = &run.trajectory;
        let a = tr.column("a").unwrap();
        let dm_slope = loglog_slope(&a, &tr.column("rho_DM").unwrap());
        let de_slope = loglog_slope(&a, &tr.column("rho_DE").unwrap());
        assert!((dm_slope + 3.0).abs() < 0.01, "{dm_slope}");
        assert!((de_slope + 3.0 * (1.0 + varpi)).abs() < 0.01, "{de_slope}");
    }
}

#[test]
fn trajectory_columns() {
    let f = FluidSpec::new(-4.0 / 3.0, 1.0, 1.0, 1.0, 1.0);
    let run = evolve_coupled_dedm(&f, 1.0, (0.0, 1.0), 11).unwrap();
    assert_eq!(run.trajectory.names, TRAJECTORY_COLUMNS[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>());
    assert_eq!(run.trajectory.len(), 11);
    assert!(evolve_coupled_dedm(&FluidSpec::new(-1.2, 1.0, -1.0, 1.0, 1.0), 1.0, (0.0, 1.0), 11).is_err());
}

#[test]
fn de_sitter_effective_flrw() {
    let lc = 0.75;
    let hc = (lc / 3.0f64).sqrt();
    let t = linspace(0.0, 2.0, 41);
    let tr = traj(&t, |s| (hc * s).exp(), |_| hc);
    let r = effective_flrw_residual(&tr, &|_, _| 0.0, &|_, _| 0.0, 1.0, lc, -1.0).unwrap();
    assert!(r.max_first < 1e-9 && r.max_second < 1e-9, "{r:?}");
    // the first equation identifies Λ̌ = 3H_c² for a = a_c e^{H_c t}
    let r = effective_flrw_residual(&tr, &|_, _| 0.0, &|_, _| 0.0, 1.0, 0.0, -1.0).unwrap();
    assert!((r.first[7] - 3.0 * hc * hc).abs() < 1e-14);
}

#[test]
fn matter_era_effective_flrw() {
    // a = t^{2/3}, H = 2/(3t), κ²ρ = 3H²
    let t = linspace(1.0, 2.0, 2001);
    let tr = traj(&t, |s| s.powf(2.0 / 3.0), |s| 2.0 / (3.0 * s));
    let rho = |_: f64, a: f64| 4.0 / (3.0 * a * a * a);
    let r = effective_flrw_residual(&tr, &rho, &|_, _| 0.0, 1.0, 0.0, -1.0).unwrap();
    assert!(r.max_first < 1e-12 && r.max_second < 1e-5, "{r:?}");
}

#[test]
fn efolding_limits_and_identities() {
    let s = LcdmSpec { h0: 0.7, rho0: 0.9, a0: 1.0, kappa2: 1.0 };
    let far = efolding_lcdm(&s, 40.0);
    assert!((far.rhat - 12.0 * 0.49).abs() < 1e-12 && (far.x - 1.0).abs() < 1e-12);
    for z in linspace(-1.0, 2.0, 13) {
        let e = efolding_lcdm(&s, z);
        let h = 1e-3;
        let dq = (s.q(z - 2.0 * h) - 8.0 * s.q(z - h) + 8.0 * s.q(z + h) - s.q(z + 2.0 * h)) / (12.0 * h);
        assert!((curvature_from_q(e.q, dq) - e.rhat).abs() < 1e-10 * e.rhat);
        assert!((curvature_from_q(e.q, s.dq(z)) - e.rhat).abs() < 1e-12 * e.rhat);
        assert!((e.x - 1.0 - s.xi() * (-3.0 * z).exp()).abs() < 1e-12);
    }
    let empty = LcdmSpec { rho0: 0.0, ..s };
    for z in [-2.0, 0.0, 3.0] {
        let e = efolding_lcdm(&empty, z);
        assert!((e.q - 0.49).abs() < 1e-15);
        assert!((e.rhat - 5.88).abs() < 1e-14);
    }
}

#[test]
fn powerlaw_inversion_examples() {
    // c = 4: linear in u
    let r = powerlaw_curvature(0.3, 4.0, 1.0, 1.0);
    let u = invert_powerlaw(r, 4.0, 1.0, 1.0).unwrap();
    assert!((u[0] - r / 24.0).abs() < 1e-14 * r);
    assert!((invert_powerlaw_printed(r, 4.0)[0] - u[0]).abs() < 1e-14 * r);
    // c = 2, ζ = 0: R̂ = 24 and u = 1 is a root
    assert!((powerlaw_curvature(0.0, 2.0, 1.0, 1.0) - 24.0).abs() < 1e-14);
    let u = invert_powerlaw(24.0, 2.0, 1.0, 1.0).unwrap();
    assert!(u.iter().any(|v| (v - 1.0).abs() < 1e-14), "{u:?}");
    // printed formula agrees at q_s = q_p = 1
    let mut p = invert_powerlaw_printed(24.0, 2.0);
    p.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in u.iter().zip(&p) {
        assert!((a - b).abs() < 1e-13);
    }
    // c = −4 is linear
    let r = powerlaw_curvature(0.5, -4.0, 2.0, 1.0);
    let u = invert_powerlaw(r, -4.0, 2.0, 1.0).unwrap();
    assert!((u[0] - (-2.0f64).exp()).abs() < 1e-14);
    assert!(matches!(invert_powerlaw(1.0, 2.0, 1.0, 1.0), Err(CosmoError::NegativeDiscriminant(_))));
}

#[test]
fn powerlaw_roundtrip_at_reference_point() {
    let (z, c) = (0.7, 3.0);
    let r = powerlaw_curvature(z, c, 1.0, 1.0);
    let roots = invert_powerlaw(r, c, 1.0, 1.0).unwrap();
    let best = roots.iter().map(|u| (u.ln() / c - z).abs()).fold(f64::INFINITY, f64::min);
    assert!(best < 1e-10, "{best}");
}

proptest! {
    #[test]
    fn inversion_reproduces_curvature(z in -1.0f64..1.0, c in 0.2f64..3.9, qs in 0.2f64..3.0, qp in 0.2f64..3.0) {
        let r = powerlaw_curvature(z, c, qs, qp);
        let roots = invert_powerlaw(r, c, qs, qp).unwrap();
        prop_assert!(roots.iter().any(|u| (u.ln() / c - z).abs() < 1e-9));
        for u in roots {
            let back = powerlaw_curvature(u.ln() / c, c, qs, qp);
            prop_assert!((back - r).abs() < 1e-10 * r.abs());
        }
    }

    #[test]
    fn big_rip_scaling(varpi in -3.0f64..-1.01, ts in -5.0f64..5.0, gap in 0.01f64..10.0) {
        let h1 = big_rip_hubble(varpi, ts, ts - gap).unwrap();
        let h2 = big_rip_hubble(varpi, ts, ts - 2.0 * gap).unwrap();
        prop_assert!((h1 - 2.0 * h2).abs() < 1e-12 * h1.abs());
    }
}
