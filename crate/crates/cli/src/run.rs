//! Dispatch of a validated scenario to the workbench modules.

use std::collections::BTreeMap;

use afdm_core::afdm::*;
use afdm_core::cosmodyn::*;
use afdm_core::fieldkit::*;
use afdm_core::nageometry::{canonical_dtorsion, levi_civita_ricci, DMetric};
use afdm_core::reconstruct::*;
use afdm_core::stability::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

use crate::output::{Check, Outcome, Table};
use crate::scenario::{Kind, Scenario};

/// Command-line adjustments applied on top of the scenario.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Grid node counts: one value for every axis or one per axis.
    pub sample: Option<Vec<usize>>,
    /// Replaces every tolerance.
    pub tolerance: Option<f64>,
    /// Replaces named tolerances; wins over `tolerance`.
    pub overrides: BTreeMap<String, f64>,
}

struct Ctx<'a> {
    sc: &'a Scenario,
    opts: &'a RunOptions,
    out: Outcome,
}

impl Ctx<'_> {
    fn tol(&self, name: &str) -> f64 {
        self.opts
            .overrides
            .get(name)
            .copied()
            .or(self.opts.tolerance)
            .unwrap_or_else(|| self.sc.tolerances.get(name).copied().unwrap_or(0.0))
    }

    fn check(&mut self, name: &str, value: f64) {
        let c = Check::new(name, value, self.tol(name));
        self.out.checks.push(c);
    }

    fn c(&self, key: &str) -> f64 {
        self.sc.constant(key)
    }

    fn field(&self, key: &str) -> Result<Field, String> {
        xt_field(self.sc.expression(key))
    }

    fn grid(&self) -> Result<Grid3, String> {
        self.sc.grid.as_ref().ok_or("scenario has no grid")?.build(self.opts.sample.as_deref())
    }
}

fn xt_field(text: &str) -> Result<Field, String> {
    parse_expression(text, &XT_VARS).map(Field::expr).map_err(|e| format!("`{text}`: {e}"))
}

fn t_field(text: &str) -> Result<Field, String> {
    parse_expression(text, &[Var::T]).map(Field::expr).map_err(|e| format!("`{text}`: {e}"))
}

fn err<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> String + '_ {
    move |e| format!("{context}: {e}")
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn count(v: f64) -> usize {
    v.max(0.0) as usize
}

/// Runs a scenario; module errors are returned with the step that raised them.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Result<Outcome, String> {
    let mut ctx = Ctx { sc, opts, out: Outcome::default() };
    match sc.kind {
        Kind::AfdmLc => afdm_lc(&mut ctx)?,
        Kind::AfdmTorsionful => afdm_torsionful(&mut ctx)?,
        Kind::EpsilonFamily => epsilon(&mut ctx)?,
        Kind::Dedm => dedm(&mut ctx)?,
        Kind::LcdmReconstruct => lcdm(&mut ctx)?,
        Kind::PowerlawReconstruct => powerlaw(&mut ctx)?,
        Kind::FgtReconstruct => fgt(&mut ctx)?,
        Kind::Stability => stability(&mut ctx)?,
        Kind::ResidualAudit => audit(&mut ctx)?,
    }
    Ok(ctx.out)
}

fn lc_data(ctx: &Ctx) -> Result<GeneratingData, String> {
    let lambda = ctx.c("Lambda");
    let psi = match ctx.sc.expression("psi") {
        "" => xt_field(&format!("{} * (x1^2 + x2^2)", lambda / 2.0))?,
        s => xt_field(s)?,
    };
    let mut g = GeneratingData::new(psi, Generating::PhiCheck(ctx.field("phi_check")?), lambda);
    if ctx.sc.expression("n_potential") != "0" {
        g.n_potential = Some(ctx.field("n_potential")?);
    }
    g.a_factor = ctx.field("a_factor")?;
    Ok(g)
}

fn metric_table(m: &DMetric, grid: &Grid3) -> Result<Table, String> {
    let mut t = Table::new("metric", &METRIC_COLUMNS);
    for row in metric_samples(m, grid).map_err(err("metric samples"))? {
        t.push_nums(&row);
    }
    Ok(t)
}

fn system_check(ctx: &mut Ctx, s: &AfdmSolution, pts: &[[f64; 3]]) -> Result<(), String> {
    let (hu, vu) = s.sources();
    let r = system_residuals(s, (&hu, &vu), pts).map_err(err("system residuals"))?;
    let mut t = Table::new("system_residuals", &["equation", "residual"]);
    for (k, v) in [("eq1m", r.eq1m), ("eq2m", r.eq2m), ("eq3m", r.eq3m), ("eq4m", r.eq4m), ("confeq", r.confeq)] {
        t.push(vec![k.into(), v.into()]);
    }
    ctx.out.tables.push(t);
    ctx.check("system", r.max());
    Ok(())
}

fn max_torsion(m: &DMetric, pts: &[[f64; 3]]) -> Result<f64, String> {
    let v = pts
        .par_iter()
        .map(|&p| canonical_dtorsion(m, p).map(|t| t.max_norm))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err("torsion"))?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

fn afdm_lc(ctx: &mut Ctx) -> Result<(), String> {
    let g = lc_data(ctx)?;
    let grid = ctx.grid()?;
    let pts = grid.points();
    let s = assemble_lc(&g, &grid).map_err(err("assembling the Levi-Civita solution"))?;
    if ctx.sc.wants("metric") {
        ctx.out.tables.push(metric_table(&s.metric, &grid)?);
    }
    if ctx.sc.wants("einstein_residual") {
        let lambda = g.lambda;
        let per = pts
            .par_iter()
            .map(|&p| levi_civita_ricci(&s.metric, p).map(|r| r.residual(lambda)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err("Einstein residual"))?;
        let mut t = Table::new("einstein_residual", &["x1", "x2", "t", "residual"]);
        for (p, r) in pts.iter().zip(&per) {
            t.push_nums(&[p[0], p[1], p[2], *r]);
        }
        ctx.out.tables.push(t);
        ctx.check("einstein", per.iter().copied().fold(0.0, f64::max));
    }
    if ctx.sc.wants("system_residuals") {
        system_check(ctx, &s, &pts)?;
    }
    if ctx.sc.wants("lc_conditions") {
        let r = check_lc(&s.metric, &pts).map_err(err("Levi-Civita conditions"))?;
        let mut t = Table::new("lc_conditions", &["condition", "residual"]);
        for (k, v) in r.values() {
            t.push(vec![k.into(), v.into()]);
        }
        ctx.out.tables.push(t);
        ctx.check("lc_conditions", r.max());
    }
    if ctx.sc.wants("torsion") {
        let v = max_torsion(&s.metric, &pts)?;
        ctx.check("torsion", v);
    }
    if ctx.sc.wants("divergence") {
        let r = divergence_residual_lc(&s.metric, &pts).map_err(err("divergence"))?;
        ctx.check("divergence", r.max);
    }
    Ok(())
}

fn afdm_torsionful(ctx: &mut Ctx) -> Result<(), String> {
    let mut g = GeneratingData::new(ctx.field("psi")?, Generating::PhiHat(ctx.field("phi_hat")?), ctx.c("Lambda"));
    g.h_upsilon = ctx.field("h_upsilon")?;
    g.v_upsilon = ctx.field("v_upsilon")?;
    g.n1fun = [ctx.field("n1_1")?, ctx.field("n1_2")?];
    g.n2fun = [ctx.field("n2_1")?, ctx.field("n2_2")?];
    g.a_factor = ctx.field("a_factor")?;
    let grid = ctx.grid()?;
    let pts = grid.points();
    let s = assemble_torsionful(&g, &grid).map_err(err("assembling the torsionful solution"))?;
    if ctx.sc.wants("metric") {
        ctx.out.tables.push(metric_table(&s.metric, &grid)?);
    }
    if ctx.sc.wants("system_residuals") {
        system_check(ctx, &s, &pts)?;
    }
    if ctx.sc.wants("torsion") {
        let v = max_torsion(&s.metric, &pts)?;
        ctx.out.note("max_torsion", v);
    }
    Ok(())
}

fn epsilon(ctx: &mut Ctx) -> Result<(), String> {
    let g = lc_data(ctx)?;
    let grid = ctx.grid()?;
    let base = assemble_lc(&g, &grid).map_err(err("assembling the base solution"))?;
    let chi = ctx.field("chi3")?;
    let nc = [ctx.field("n_check_1")?, ctx.field("n_check_2")?];
    let wc = [ctx.field("w_check_1")?, ctx.field("w_check_2")?];
    let eps = ctx.c("epsilon");
    let fam = |e: f64| epsilon_family(&base, e, &chi, &nc, &wc);
    if ctx.sc.wants("metric") {
        ctx.out.tables.push(metric_table(&fam(eps), &grid)?);
    }
    if ctx.sc.wants("linearity") {
        let (m0, m1, m2) = (fam(0.0), fam(eps), fam(2.0 * eps));
        let mut worst: f64 = 0.0;
        for p in grid.points() {
            let (a, b, c) = (
                m0.sample(p).map_err(err("ε = 0"))?,
                m1.sample(p).map_err(err("ε"))?,
                m2.sample(p).map_err(err("2ε"))?,
            );
            for k in 0..9 {
                worst = worst.max((c[k] - 2.0 * b[k] + a[k]).abs() / b[k].abs().max(1.0));
            }
        }
        ctx.check("linearity", worst);
    }
    Ok(())
}

fn dedm(ctx: &mut Ctx) -> Result<(), String> {
    let mut spec = FluidSpec::new(ctx.c("varpi"), ctx.c("Q"), ctx.c("rho_de"), ctx.c("rho_dm"), ctx.c("kappa2"));
    if ctx.c("printed_source") != 0.0 {
        spec.source = CouplingSource::Printed;
    }
    let span = (0.0, ctx.c("t_end"));
    let samples = count(ctx.c("samples"));
    let run = evolve_coupled_dedm(&spec, ctx.c("a0"), span, samples).map_err(err("DE–DM evolution"))?;
    if ctx.sc.wants("trajectory") {
        let mut t = Table::new("trajectory", &TRAJECTORY_COLUMNS);
        for (s, y) in run.trajectory.s.iter().zip(&run.trajectory.states) {
            let mut row = vec![*s];
            row.extend_from_slice(y);
            t.push_nums(&row);
        }
        ctx.out.tables.push(t);
        let col_max = |name: &str| {
            run.trajectory.column(name).map_or(f64::NAN, |c| c.iter().map(|v| v.abs()).fold(0.0, f64::max))
        };
        let (r1, r2) = (col_max("residual1"), col_max("residual2"));
        ctx.check("residual1", r1);
        ctx.check("residual2", r2);
        ctx.out.note("report", &run.report);
    }
    if ctx.sc.wants("attractor") {
        let n = count(ctx.c("random_ics")).max(1);
        let mut rng = StdRng::seed_from_u64(ctx.sc.seed);
        let mut t = Table::new("attractor", &["rho_DE0", "rho_DM0", "final_H", "final_ratio", "deviation", "stopped"]);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let (de, dm) = if ctx.c("random_ics") > 0.0 {
                (rng.random_range(1.0..4.0), rng.random_range(0.2..1.5))
            } else {
                (spec.rho0_de, spec.rho0_dm)
            };
            let s = FluidSpec { rho0_de: de, rho0_dm: dm, ..spec };
            let r = evolve_coupled_dedm(&s, ctx.c("a0"), span, samples)
                .map_err(err(&format!("initial condition {i}")))?
                .report;
            // the target is the stated attractor: H → H*, ρ_DM/ρ_DE → 1 + ϖ
            let dev = if r.singular.is_some() {
                f64::INFINITY
            } else {
                ((r.final_hubble - r.expected_hubble) / r.expected_hubble)
                    .abs()
                    .max(((r.final_ratio - r.printed_ratio) / r.printed_ratio).abs())
            };
            worst = worst.max(dev);
            t.push(vec![
                de.into(),
                dm.into(),
                r.final_hubble.into(),
                r.final_ratio.into(),
                dev.into(),
                r.singular.unwrap_or_default().into(),
            ]);
        }
        ctx.out.tables.push(t);
        ctx.check("attractor", worst);
    }
    if ctx.sc.wants("big_rip") && ctx.c("big_rip_h0") > 0.0 {
        let fit = big_rip_fit(spec.varpi, ctx.c("big_rip_h0")).map_err(err("Big Rip fit"))?;
        ctx.out.note("big_rip", &fit);
        ctx.check("big_rip_exponent", (fit.exponent + 1.0).abs());
    }
    Ok(())
}

fn lcdm(ctx: &mut Ctx) -> Result<(), String> {
    let spec = LcdmSpec { h0: ctx.c("H0"), rho0: ctx.c("rho0"), a0: ctx.c("a0"), kappa2: ctx.c("kappa2") };
    let chi = (ctx.c("chi1"), ctx.c("chi2"), ctx.c("chi3"));
    let (lo, hi) = (ctx.c("zeta_min"), ctx.c("zeta_max"));
    let zetas = linspace(lo, hi, count(ctx.c("samples")));
    let q = lcdm_q_field(&spec);
    let model = lcdm_model(&spec, chi, lo, hi, 2 * zetas.len() + 1).map_err(err("propagating the Gauss solution"))?;
    let pts = f1gen_scan(&model, &q, &F1genMatter::none(), &zetas).map_err(err("f1gen scan"))?;
    let mut t = Table::new("lcdm", &["zeta", "q", "Rhat", "X", "f", "f1gen_residual"]);
    let (mut worst, mut curv) = (0.0f64, 0.0f64);
    for p in &pts {
        let e = efolding_lcdm(&spec, p.zeta);
        curv = curv.max((curvature_from_q(spec.q(p.zeta), spec.dq(p.zeta)) - e.rhat).abs() / e.rhat.abs());
        worst = worst.max(p.residual);
        t.push_nums(&[p.zeta, e.q, e.rhat, e.x, p.f, p.residual]);
    }
    ctx.out.tables.push(t);
    ctx.out.note("chi", [chi.0, chi.1, chi.2]);
    ctx.check("curvature", curv);
    ctx.check("f1gen", worst);
    Ok(())
}

fn powerlaw(ctx: &mut Ctx) -> Result<(), String> {
    let conv = if ctx.c("linear_h0") != 0.0 { H0Convention::Linear } else { H0Convention::Inverse };
    let e = euler_reconstruct(ctx.c("w_ph"), conv).map_err(err("Euler reconstruction"))?;
    if ctx.sc.wants("euler") {
        let mut t = Table::new("euler", &["w_ph", "H0", "A", "B", "root", "real", "imag"]);
        let roots = match e.roots {
            IndicialRoots::Real { plus, minus } => [("m_plus", plus, 0.0), ("m_minus", minus, 0.0)],
            IndicialRoots::Complex { re, im } => [("m_plus", re, im), ("m_minus", re, -im)],
        };
        let mut ind: f64 = 0.0;
        for (label, re, im) in roots {
            t.push(vec![e.w_ph.into(), e.h0.into(), e.a.into(), e.b.into(), label.into(), re.into(), im.into()]);
            if im == 0.0 {
                ind = ind.max(indicial_residual(e.a, e.b, re).abs());
            }
        }
        ctx.out.tables.push(t);
        ctx.check("indicial", ind);
        if let Some(m) = &e.model {
            let mut worst: f64 = 0.0;
            for r in [0.5, 1.0, 2.0, 5.0] {
                let v = m.eval(Invariants::curvature(r)).map_err(err("power-law model"))?;
                let scale = (r * r * v.f11).abs().max(1.0);
                worst = worst.max((r * r * v.f11 + e.a * r * v.f1 + e.b * v.f).abs() / scale);
            }
            ctx.check("euler_ode", worst);
        }
    }
    if ctx.sc.wants("rip") {
        let mut t = Table::new("rip", &["t", "a", "H", "H_times_ts_minus_t"]);
        let mut worst: f64 = 0.0;
        let ts = e.rip.t_s;
        for time in linspace(ctx.c("t_min"), ts - 1e-3, count(ctx.c("samples")).max(2)) {
            let h = e.rip.hubble(time);
            let prod = h * (ts - time);
            worst = worst.max((prod - e.h0).abs());
            t.push_nums(&[time, e.rip.scale(time), h, prod]);
        }
        ctx.out.tables.push(t);
        ctx.check("rip", worst);
    }
    let (c, qs, qp) = (ctx.c("c"), ctx.c("q_s"), ctx.c("q_p"));
    if ctx.sc.wants("inversion") && c != 0.0 {
        let mut t = Table::new("inversion", &["zeta", "Rhat", "zeta_back", "error", "printed_root"]);
        let mut worst: f64 = 0.0;
        for z in linspace(ctx.c("zeta_min"), ctx.c("zeta_max"), count(ctx.c("samples"))) {
            let r = powerlaw_curvature(z, c, qs, qp);
            let roots = invert_powerlaw(r, c, qs, qp).map_err(err("power-law inversion"))?;
            let back = roots
                .iter()
                .map(|e| e.ln() / c)
                .min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()))
                .unwrap_or(f64::NAN);
            let printed = invert_powerlaw_printed(r, c).first().copied().unwrap_or(f64::NAN);
            worst = worst.max((back - z).abs());
            t.push_nums(&[z, r, back, (back - z).abs(), printed]);
        }
        ctx.out.tables.push(t);
        ctx.check("roundtrip", worst);
    }
    Ok(())
}

fn fgt(ctx: &mut Ctx) -> Result<(), String> {
    let (xi, h0, k2) = (ctx.c("xi"), ctx.c("H0"), ctx.c("kappa2"));
    let cmp = compare_fgt_exponents(ctx.c("root_tolerance"));
    if ctx.sc.wants("roots") {
        let mut t = Table::new("roots", &["source", "real", "imag"]);
        for (re, im) in cmp.printed {
            t.push(vec!["printed".into(), re.into(), im.into()]);
        }
        for d in cmp.derived {
            t.push(vec!["derived".into(), d.into(), 0.0.into()]);
        }
        ctx.out.tables.push(t);
        ctx.out.note("root_comparison", &cmp);
        // ς = (1+z)^{3b} plus the dust response must solve the de Sitter reduction
        let rho0 = 3.0 * h0 * h0 * xi / k2;
        let sp = -k2 * rho0 / (4.5 * h0 * h0);
        let adopted: Vec<f64> = match cmp.adopted {
            RootChoice::Printed => vec![PRINTED_B[0]],
            RootChoice::Derived => cmp.derived[..2].to_vec(),
        };
        let mut worst: f64 = 0.0;
        for b in adopted {
            let varsigma = xt_field(&format!("(1 + t)^{} + {sp} * (1 + t)^3", 3.0 * b))?;
            let rho = xt_field(&format!("{rho0} * (1 + t)^3"))?;
            let f = 2.0 * &(&(&(4.5 * h0 * h0 * &varsigma) + &(k2 * &rho)) - 3.0 * h0 * h0);
            let c =
                CeqInputs { f, g: Field::constant(0.0), h: Field::constant(h0), rho, varsigma, kappa2: k2, g1: 0.0 };
            for z in [0.0, 0.7, 1.5] {
                let r = ceq_residual(&c, z).map_err(err("de Sitter reduction"))?;
                worst = worst.max(r[1].abs());
            }
        }
        ctx.check("ds_reduction", worst);
    }
    if ctx.sc.wants("ceq") {
        let m = FgtModel::new(
            [ctx.c("c1"), ctx.c("c2"), ctx.c("c3"), ctx.c("c4")],
            [ctx.c("ct1"), ctx.c("ct2"), ctx.c("ct3"), ctx.c("ct4")],
            xi,
            h0,
            k2,
        );
        let inputs = fgt_ceq_inputs(&m);
        let mut t = Table::new("ceq", &["z", "r1", "r2", "r3"]);
        let mut worst: f64 = 0.0;
        for z in linspace(0.0, ctx.c("z_max"), count(ctx.c("samples"))) {
            let r = ceq_residual(&inputs, z).map_err(err("redshift system"))?;
            worst = worst.max(r[0].abs()).max(r[1].abs()).max(r[2].abs());
            t.push_nums(&[z, r[0], r[1], r[2]]);
        }
        ctx.out.tables.push(t);
        ctx.out.note("printed_model_max_ceq_residual", worst);
    }
    Ok(())
}

fn stability(ctx: &mut Ctx) -> Result<(), String> {
    let s = StabilityInputs {
        xi0: ctx.c("Xi0"),
        p0: ctx.c("P0"),
        t0: ctx.c("T0"),
        f1_1: ctx.c("f1_1"),
        f1: ctx.c("F1"),
        f2: ctx.c("F2"),
        matter_l: ctx.c("L"),
        kappa2: ctx.c("kappa2"),
        source_override: Some(ctx.c("source")).filter(|v| !v.is_nan()),
    };
    if ctx.sc.wants("criterion") {
        let c = oscillator_criterion(&s).map_err(err("oscillator criterion"))?;
        ctx.out.note("criterion", c);
    }
    if ctx.sc.wants("perturbation") {
        let h = t_field(ctx.sc.expression("H"))?;
        let dr = match ctx.sc.expression("delta_R") {
            "" => None,
            text => Some(t_field(text)?),
        };
        let nodes = linspace(0.0, ctx.c("t_end"), count(ctx.c("samples")));
        let run = evolve_perturbation(
            &s,
            &h,
            dr.as_ref(),
            (ctx.c("dP0"), ctx.c("dP_dot0")),
            &nodes,
            OdeControl::with_tolerance(1e-10, 1e-13),
        )
        .map_err(err("perturbation evolution"))?;
        let mut t = Table::new("perturbation", &["t", "dP", "dP_dot"]);
        for (time, y) in run.trajectory.s.iter().zip(&run.trajectory.states) {
            t.push_nums(&[*time, y[0], y[1]]);
        }
        ctx.out.tables.push(t);
        ctx.out.note("classification", run.classification);
        ctx.out.note("omega2", run.omega2);
        ctx.out.note("envelope_slope", run.envelope_slope);
        // closed-form envelope when H is constant and the motion underdamped
        let h_values: Vec<f64> = nodes.iter().map(|&x| h.value([0.0, 0.0, x]).unwrap_or(f64::NAN)).collect();
        let constant_h = h_values.iter().all(|v| *v == h_values[0]);
        if constant_h && dr.is_none() {
            if let Some(env) = run.damped_envelope(h_values[0]) {
                let g = 1.5 * h_values[0];
                let worst = nodes
                    .iter()
                    .zip(&env)
                    .map(|(x, e)| (e / (env[0] * (-g * (x - nodes[0])).exp()) - 1.0).abs())
                    .fold(0.0, f64::max);
                ctx.check("envelope", worst);
            }
        }
    }
    Ok(())
}

fn audit_torsionful(rng: &mut StdRng) -> Result<GeneratingData, String> {
    let (a, b, c) = (rng.random_range(0.2..1.0), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let (alpha, beta) = (rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5));
    let psi = xt_field(&format!("{alpha} * x1^2 * x2 + {beta} * x2^2 + {} * x1 * x2", rng.random_range(-1.0..1.0)))?;
    let mut g =
        GeneratingData::new(psi, Generating::PhiHat(xt_field(&format!("exp({a} * t + {b} * x1 + {c} * x2)"))?), 1.3);
    g.h_upsilon = xt_field(&format!("{alpha} * x2 + {beta}"))?;
    g.v_upsilon = xt_field(&format!("1.5 + {} * sin(t + x1)", rng.random_range(0.0..0.3)))?;
    g.n1fun = [
        xt_field(&format!("{} * x2", rng.random_range(-1.0..1.0)))?,
        xt_field(&format!("{} * x1 * x2", rng.random_range(-1.0..1.0)))?,
    ];
    Ok(g)
}

fn audit_lc(rng: &mut StdRng) -> Result<GeneratingData, String> {
    let lambda = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let (a, b, c) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.3..1.5));
    let psi = xt_field(&format!(
        "{} * (x1^2 + x2^2) + {} * x1 * x2 + {} * x1",
        lambda / 2.0,
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0)
    ))?;
    let mut g = GeneratingData::new(
        psi,
        Generating::PhiCheck(xt_field(&format!("exp({a} * x1 + {b} * x2 + {c} * t)"))?),
        lambda,
    );
    g.n_potential = Some(xt_field(&format!("{} * x1^2 * x2", rng.random_range(-1.0..1.0)))?);
    Ok(g)
}

fn random_expression(rng: &mut StdRng, depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..4) {
            0 => "x1".into(),
            1 => "x2".into(),
            2 => "t".into(),
            _ => format!("{:.3}", rng.random_range(-2.0..2.0)),
        };
    }
    let a = random_expression(rng, depth - 1);
    match rng.random_range(0..9) {
        0 => format!("sin({a})"),
        1 => format!("cos({a})"),
        2 => format!("exp(0.5 * sin({a}))"),
        3 => format!("ln(2 + cos({a}))"),
        4 => format!("sqrt(1.5 + sin({a}))"),
        5 => format!("({a})^{}", rng.random_range(2..4)),
        6 => format!("({a}) * ({})", random_expression(rng, depth - 1)),
        7 => format!("({a}) / (2 + sin({}))", random_expression(rng, depth - 1)),
        _ => format!("({a}) - ({})", random_expression(rng, depth - 1)),
    }
}

fn audit(ctx: &mut Ctx) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(ctx.sc.seed);
    let grid =
        Grid3::new(Axis::new(0.2, 0.8, 5), Axis::new(0.2, 0.8, 5), Axis::new(0.1, 0.9, 5)).map_err(err("grid"))?;
    let pts = grid.points();
    if ctx.sc.wants("system") {
        let mut t = Table::new("system", &["scenario", "branch", "residual"]);
        let mut worst: f64 = 0.0;
        for k in 0..count(ctx.c("scenarios")) {
            let tors = assemble_torsionful(&audit_torsionful(&mut rng)?, &grid).map_err(err("torsionful scenario"))?;
            let lc = assemble_lc(&audit_lc(&mut rng)?, &grid).map_err(err("Levi-Civita scenario"))?;
            for (branch, s) in [("torsionful", tors), ("lc", lc)] {
                let (hu, vu) = s.sources();
                let r = system_residuals(&s, (&hu, &vu), &pts).map_err(err(branch))?.max();
                worst = worst.max(r);
                t.push(vec![(k as f64).into(), branch.into(), r.into()]);
            }
        }
        ctx.out.tables.push(t);
        ctx.check("system", worst);
    }
    if ctx.sc.wants("n_formula") {
        let mut worst: f64 = 0.0;
        for _ in 0..count(ctx.c("scenarios")) {
            let (a, b) = (rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
            let h3 = xt_field(&format!("2 + sin({a} * x1 * t) + t^2"))?;
            let h4 = xt_field(&format!("-(1 + {b} * x2 * t^3)"))?;
            let r = n_formula_residual(&h3, &h4, &xt_field("x1")?, &xt_field("1 + x2")?, 0.1, &pts)
                .map_err(err("n-formula"))?;
            worst = worst.max(r);
        }
        ctx.check("n_formula", worst);
    }
    if ctx.sc.wants("jets") {
        let mut worst: f64 = 0.0;
        for _ in 0..count(ctx.c("expressions")) {
            let text = random_expression(&mut rng, 4);
            let e = parse_expression(&text, &XT_VARS).map_err(err(&text))?;
            let p = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), rng.random_range(0.1..0.9)];
            let jet = e.jet(p, 1).map_err(err(&text))?;
            let h = 1e-3;
            for axis in 0..3 {
                let at = |k: f64| {
                    let mut q = p;
                    q[axis] += k * h;
                    e.eval_at(Point::new(q[0], q[1], q[2]))
                };
                let fd = (at(-2.0).map_err(err(&text))? - 8.0 * at(-1.0).map_err(err(&text))?
                    + 8.0 * at(1.0).map_err(err(&text))?
                    - at(2.0).map_err(err(&text))?)
                    / (12.0 * h);
                let d = jet.derivative(axis).value();
                worst = worst.max((d - fd).abs() / d.abs().max(1.0));
            }
        }
        ctx.check("jets", worst);
    }
    if ctx.sc.wants("poisson") {
        use std::f64::consts::PI;
        let mut t = Table::new("poisson", &["n", "max_error"]);
        let mut errs = Vec::new();
        for n in [17, 33, 65] {
            let ax = Axis::new(0.0, 1.0, n);
            let sol = solve_poisson_2d(
                &|x, y| -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin(),
                ax,
                ax,
                &|_, _| 0.0,
                PoissonOptions::default(),
            )
            .map_err(err("Poisson solve"))?;
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((sol.at(i, j) - (PI * ax.node(i)).sin() * (PI * ax.node(j)).sin()).abs());
                }
            }
            t.push_nums(&[n as f64, worst]);
            errs.push(worst);
        }
        ctx.out.tables.push(t);
        let order = 0.5 * ((errs[0] / errs[1]).log2() + (errs[1] / errs[2]).log2());
        ctx.out.note("poisson_order", order);
        ctx.check("poisson_order", (order - 2.0).abs());
    }
    Ok(())
}
