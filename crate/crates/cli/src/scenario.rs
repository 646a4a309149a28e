//! Scenario files: a flat key-value tree read with the expression tokenizer.
//!
//! ```text
//! # comment to end of line
//! kind = "afdm-lc"
//! seed = 7
//! constants.Lambda = 1
//! expressions.phi_check = "exp(x1 + x2 + t)"
//! grid.x1 = [0.2, 0.8, 17]
//! outputs = ["einstein_residual", "metric"]
//! tolerance.einstein = 1e-6
//! ```
//!
//! Each line is `key = value` where the key is a dotted identifier and the
//! value a number, a quoted string, a bare identifier or a bracketed list of
//! those. Sections are `constants`, `expressions`, `grid` (axes `x1`, `x2`,
//! `t` as `[lo, hi, n]`) and `tolerance`; top-level keys are `kind`, `name`,
//! `seed` and `outputs`.

use std::collections::BTreeMap;
use std::fmt;

use afdm_core::fieldkit::expr::{tokenize, Token, TokenKind};
use afdm_core::fieldkit::{parse_expression, Axis, Grid3, Var, XT_VARS};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Value {
    Number(f64),
    Text(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v}"),
            Value::Text(s) => write!(f, "\"{s}\""),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A problem found while reading or validating a scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    /// JSON-pointer-style location such as `/constants/Lambda`.
    pub path: String,
    pub line: Option<usize>,
    pub offset: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.offset) {
            (Some(l), Some(o)) => write!(f, "{} (line {l}, offset {o}): {}", self.path, self.message),
            (Some(l), None) => write!(f, "{} (line {l}): {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

/// Raw `key = value` entries with the line each came from.
#[derive(Clone, Debug, Default)]
pub struct Document {
    pub entries: Vec<(String, Value, usize)>,
}

pub fn read_document(text: &str) -> Result<Document, Vec<Diagnostic>> {
    let mut doc = Document::default();
    let mut diags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens = match tokenize(line) {
            Ok(t) => t,
            Err(e) => {
                diags.push(Diagnostic {
                    path: "/".into(),
                    line: Some(lineno),
                    offset: Some(e.offset()),
                    message: e.to_string(),
                });
                continue;
            }
        };
        if tokens.is_empty() {
            continue;
        }
        match parse_entry(&tokens, line.len()) {
            Ok((k, v)) => {
                if doc.entries.iter().any(|e| e.0 == k) {
                    diags.push(Diagnostic {
                        path: pointer(&k),
                        line: Some(lineno),
                        offset: None,
                        message: "duplicate key".into(),
                    });
                } else {
                    doc.entries.push((k, v, lineno));
                }
            }
            Err((offset, message)) => {
                diags.push(Diagnostic { path: "/".into(), line: Some(lineno), offset: Some(offset), message })
            }
        }
    }
    if diags.is_empty() {
        Ok(doc)
    } else {
        Err(diags)
    }
}

fn parse_entry(tokens: &[Token], end: usize) -> Result<(String, Value), (usize, String)> {
    let key = match &tokens[0].kind {
        TokenKind::Ident(k) => k.clone(),
        _ => return Err((tokens[0].offset, "expected a key".into())),
    };
    match tokens.get(1) {
        Some(Token { kind: TokenKind::Equals, .. }) => {}
        Some(t) => return Err((t.offset, "expected `=`".into())),
        None => return Err((end, "expected `=`".into())),
    }
    let mut pos = 2;
    let value = parse_value(tokens, &mut pos, end)?;
    if let Some(t) = tokens.get(pos) {
        return Err((t.offset, "unexpected trailing input".into()));
    }
    Ok((key, value))
}

fn parse_value(tokens: &[Token], pos: &mut usize, end: usize) -> Result<Value, (usize, String)> {
    let Some(t) = tokens.get(*pos) else {
        return Err((end, "expected a value".into()));
    };
    *pos += 1;
    match &t.kind {
        TokenKind::Number(v) => Ok(Value::Number(*v)),
        TokenKind::Minus => match tokens.get(*pos) {
            Some(Token { kind: TokenKind::Number(v), .. }) => {
                *pos += 1;
                Ok(Value::Number(-v))
            }
            _ => Err((t.offset, "expected a number after `-`".into())),
        },
        TokenKind::Str(s) => Ok(Value::Text(s.clone())),
        TokenKind::Ident(s) => Ok(Value::Text(s.clone())),
        TokenKind::LBracket => {
            let mut items = Vec::new();
            if matches!(tokens.get(*pos), Some(Token { kind: TokenKind::RBracket, .. })) {
                *pos += 1;
                return Ok(Value::List(items));
            }
            loop {
                items.push(parse_value(tokens, pos, end)?);
                match tokens.get(*pos) {
                    Some(Token { kind: TokenKind::Comma, .. }) => *pos += 1,
                    Some(Token { kind: TokenKind::RBracket, .. }) => {
                        *pos += 1;
                        return Ok(Value::List(items));
                    }
                    Some(t) => return Err((t.offset, "expected `,` or `]`".into())),
                    None => return Err((end, "unterminated list".into())),
                }
            }
        }
        _ => Err((t.offset, "expected a value".into())),
    }
}

fn pointer(key: &str) -> String {
    format!("/{}", key.replace('.', "/"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    AfdmLc,
    AfdmTorsionful,
    EpsilonFamily,
    Dedm,
    LcdmReconstruct,
    PowerlawReconstruct,
    FgtReconstruct,
    Stability,
    ResidualAudit,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::AfdmLc,
        Kind::AfdmTorsionful,
        Kind::EpsilonFamily,
        Kind::Dedm,
        Kind::LcdmReconstruct,
        Kind::PowerlawReconstruct,
        Kind::FgtReconstruct,
        Kind::Stability,
        Kind::ResidualAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::AfdmLc => "afdm-lc",
            Kind::AfdmTorsionful => "afdm-torsionful",
            Kind::EpsilonFamily => "epsilon-family",
            Kind::Dedm => "dedm",
            Kind::LcdmReconstruct => "lcdm-reconstruct",
            Kind::PowerlawReconstruct => "powerlaw-reconstruct",
            Kind::FgtReconstruct => "fgt-reconstruct",
            Kind::Stability => "stability",
            Kind::ResidualAudit => "residual-audit",
        }
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Keys a kind accepts, with defaults for the optional ones.
pub struct Schema {
    pub required_constants: &'static [&'static str],
    pub optional_constants: &'static [(&'static str, f64)],
    pub required_expressions: &'static [&'static str],
    pub optional_expressions: &'static [(&'static str, &'static str)],
    pub needs_grid: bool,
    pub outputs: &'static [&'static str],
    /// Checks and their default tolerances.
    pub tolerances: &'static [(&'static str, f64)],
}

const LC_EXPRESSIONS: &[(&str, &str)] = &[("psi", ""), ("n_potential", "0"), ("a_factor", "1")];

pub fn schema(kind: Kind) -> Schema {
    match kind {
        Kind::AfdmLc => Schema {
            required_constants: &["Lambda"],
            optional_constants: &[],
            required_expressions: &["phi_check"],
            optional_expressions: LC_EXPRESSIONS,
            needs_grid: true,
            outputs: &["metric", "einstein_residual", "system_residuals", "lc_conditions", "torsion", "divergence"],
            tolerances: &[
                ("einstein", 1e-6),
                ("system", 1e-6),
                ("lc_conditions", 1e-8),
                ("torsion", 1e-8),
                ("divergence", 1e-5),
            ],
        },
        Kind::AfdmTorsionful => Schema {
            required_constants: &["Lambda"],
            optional_constants: &[],
            required_expressions: &["phi_hat", "psi", "h_upsilon", "v_upsilon"],
            optional_expressions: &[("n1_1", "0"), ("n1_2", "0"), ("n2_1", "0"), ("n2_2", "0"), ("a_factor", "1")],
            needs_grid: true,
            outputs: &["metric", "system_residuals", "torsion"],
            tolerances: &[("system", 1e-6)],
        },
        Kind::EpsilonFamily => Schema {
            required_constants: &["Lambda", "epsilon"],
            optional_constants: &[],
            required_expressions: &["phi_check", "chi3"],
            optional_expressions: &[
                ("psi", ""),
                ("n_potential", "0"),
                ("a_factor", "1"),
                ("n_check_1", "0"),
                ("n_check_2", "0"),
                ("w_check_1", "0"),
                ("w_check_2", "0"),
            ],
            needs_grid: true,
            outputs: &["metric", "linearity"],
            tolerances: &[("linearity", 1e-10)],
        },
        Kind::Dedm => Schema {
            required_constants: &["varpi", "Q"],
            optional_constants: &[
                ("rho_de", 1.0),
                ("rho_dm", 1.0),
                ("kappa2", 1.0),
                ("a0", 1.0),
                ("t_end", 5.0),
                ("samples", 101.0),
                ("random_ics", 0.0),
                ("printed_source", 0.0),
                ("big_rip_h0", 0.0),
            ],
            required_expressions: &[],
            optional_expressions: &[],
            needs_grid: false,
            outputs: &["trajectory", "attractor", "big_rip"],
            tolerances: &[("residual1", 1e-7), ("residual2", 1e-7), ("attractor", 1e-2), ("big_rip_exponent", 1e-2)],
        },
        Kind::LcdmReconstruct => Schema {
            required_constants: &["H0", "rho0"],
            optional_constants: &[
                ("a0", 1.0),
                ("kappa2", 1.0),
                ("zeta_min", 0.0),
                ("zeta_max", 3.0),
                ("samples", 31.0),
                ("chi1", 1.0 / 3.0),
                ("chi2", -0.5),
                ("chi3", -0.5),
            ],
            required_expressions: &[],
            optional_expressions: &[],
            needs_grid: false,
            outputs: &["lcdm"],
            tolerances: &[("f1gen", 1e-6), ("curvature", 1e-10)],
        },
        Kind::PowerlawReconstruct => Schema {
            required_constants: &["w_ph"],
            optional_constants: &[
                ("linear_h0", 0.0),
                ("c", 0.0),
                ("q_s", 0.0),
                ("q_p", 0.0),
                ("zeta_min", 0.1),
                ("zeta_max", 2.0),
                ("samples", 20.0),
                ("t_min", -5.0),
            ],
            required_expressions: &[],
            optional_expressions: &[],
            needs_grid: false,
            outputs: &["euler", "rip", "inversion"],
            tolerances: &[("indicial", 1e-12), ("rip", 1e-12), ("euler_ode", 1e-10), ("roundtrip", 1e-10)],
        },
        Kind::FgtReconstruct => Schema {
            required_constants: &["xi", "H0"],
            optional_constants: &[
                ("kappa2", 1.0),
                ("c1", 0.0),
                ("c2", 0.0),
                ("c3", 0.0),
                ("c4", 0.0),
                ("ct1", 0.0),
                ("ct2", 0.0),
                ("ct3", 0.0),
                ("ct4", 0.0),
                ("root_tolerance", 0.01),
                ("z_max", 2.0),
                ("samples", 21.0),
            ],
            required_expressions: &[],
            optional_expressions: &[],
            needs_grid: false,
            outputs: &["roots", "ceq"],
            tolerances: &[("ds_reduction", 1e-9)],
        },
        Kind::Stability => Schema {
            required_constants: &["Xi0", "P0", "T0", "f1_1", "F2"],
            optional_constants: &[
                ("F1", 0.0),
                ("L", 0.0),
                ("kappa2", 1.0),
                ("dP0", 1.0),
                ("dP_dot0", 0.0),
                ("t_end", 20.0),
                ("samples", 201.0),
                ("source", f64::NAN),
            ],
            required_expressions: &["H"],
            optional_expressions: &[("delta_R", "")],
            needs_grid: false,
            outputs: &["perturbation", "criterion"],
            tolerances: &[("envelope", 0.02)],
        },
        Kind::ResidualAudit => Schema {
            required_constants: &[],
            optional_constants: &[("scenarios", 5.0), ("expressions", 1000.0)],
            required_expressions: &[],
            optional_expressions: &[],
            needs_grid: false,
            outputs: &["system", "n_formula", "jets", "poisson"],
            tolerances: &[("system", 1e-6), ("n_formula", 1e-8), ("jets", 1e-6), ("poisson_order", 0.1)],
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSpec {
    pub x1: [f64; 3],
    pub x2: [f64; 3],
    pub t: [f64; 3],
}

impl GridSpec {
    pub fn build(&self, sample: Option<&[usize]>) -> Result<Grid3, String> {
        let n = |i: usize, v: f64| -> usize {
            match sample {
                Some([k]) => *k,
                Some(ks) if ks.len() == 3 => ks[i],
                _ => v as usize,
            }
        };
        Grid3::new(
            Axis::new(self.x1[0], self.x1[1], n(0, self.x1[2])),
            Axis::new(self.x2[0], self.x2[1], n(1, self.x2[2])),
            Axis::new(self.t[0], self.t[1], n(2, self.t[2])),
        )
        .map_err(|e| e.to_string())
    }
}

/// A validated scenario with defaults filled in.
#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub kind: Kind,
    pub name: String,
    pub seed: u64,
    pub constants: BTreeMap<String, f64>,
    pub expressions: BTreeMap<String, String>,
    pub grid: Option<GridSpec>,
    pub outputs: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn constant(&self, key: &str) -> f64 {
        self.constants[key]
    }

    pub fn expression(&self, key: &str) -> &str {
        &self.expressions[key]
    }

    pub fn wants(&self, output: &str) -> bool {
        self.outputs.iter().any(|o| o == output)
    }
}

fn expression_vars(kind: Kind) -> &'static [Var] {
    match kind {
        Kind::Stability => &[Var::T],
        _ => &XT_VARS,
    }
}

/// Read and schema-check a scenario; all problems are reported together.
pub fn parse_scenario(text: &str, default_name: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let doc = read_document(text)?;
    let mut diags = Vec::new();
    let diag = |path: String, line: Option<usize>, message: String| Diagnostic { path, line, offset: None, message };

    let kind = match doc.entries.iter().find(|e| e.0 == "kind") {
        Some((_, Value::Text(s), line)) => match Kind::from_name(s) {
            Some(k) => Some(k),
            None => {
                let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
                diags.push(diag(
                    "/kind".into(),
                    Some(*line),
                    format!("unknown kind `{s}`; expected one of {}", names.join(", ")),
                ));
                None
            }
        },
        Some((_, _, line)) => {
            diags.push(diag("/kind".into(), Some(*line), "kind must be a string".into()));
            None
        }
        None => {
            diags.push(diag("/kind".into(), None, "missing required key `kind`".into()));
            None
        }
    };
    let Some(kind) = kind else {
        return Err(diags);
    };
    let sc = schema(kind);

    let mut name = default_name.to_string();
    let mut seed = 0u64;
    let mut constants = BTreeMap::new();
    let mut expressions = BTreeMap::new();
    let mut axes: BTreeMap<String, [f64; 3]> = BTreeMap::new();
    let mut outputs: Option<Vec<String>> = None;
    let mut tolerances = BTreeMap::new();

    for (key, value, line) in &doc.entries {
        let line = Some(*line);
        let path = pointer(key);
        let (section, rest) = key.split_once('.').unwrap_or((key.as_str(), ""));
        match (section, rest, value) {
            ("kind", "", _) => {}
            ("name", "", Value::Text(s)) => name = s.clone(),
            ("seed", "", Value::Number(v)) if *v >= 0.0 && v.fract() == 0.0 => seed = *v as u64,
            ("seed", "", _) => diags.push(diag(path, line, "seed must be a non-negative integer".into())),
            ("outputs", "", Value::List(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Text(s) if sc.outputs.contains(&s.as_str()) => out.push(s.clone()),
                        Value::Text(s) => diags.push(diag(
                            format!("/outputs/{i}"),
                            line,
                            format!(
                                "unknown output `{s}` for {}; expected one of {}",
                                kind.name(),
                                sc.outputs.join(", ")
                            ),
                        )),
                        _ => diags.push(diag(format!("/outputs/{i}"), line, "outputs must be strings".into())),
                    }
                }
                outputs = Some(out);
            }
            ("constants", c, Value::Number(v)) if !c.is_empty() => {
                let known = sc.required_constants.contains(&c) || sc.optional_constants.iter().any(|o| o.0 == c);
                if known {
                    constants.insert(c.to_string(), *v);
                } else {
                    diags.push(diag(path, line, format!("unknown constant for {}", kind.name())));
                }
            }
            ("constants", _, _) => diags.push(diag(path, line, "constants must be numbers".into())),
            ("expressions", e, Value::Text(s)) if !e.is_empty() => {
                let known = sc.required_expressions.contains(&e) || sc.optional_expressions.iter().any(|o| o.0 == e);
                if !known {
                    diags.push(diag(path, line, format!("unknown expression for {}", kind.name())));
                } else if let Err(err) = parse_expression(s, expression_vars(kind)) {
                    diags.push(Diagnostic {
                        path,
                        line,
                        offset: Some(err.offset()),
                        message: format!("in \"{s}\": {err}"),
                    });
                } else {
                    expressions.insert(e.to_string(), s.clone());
                }
            }
            ("expressions", _, _) => diags.push(diag(path, line, "expressions must be quoted strings".into())),
            ("grid", ax @ ("x1" | "x2" | "t"), Value::List(items)) => match items.as_slice() {
                [Value::Number(lo), Value::Number(hi), Value::Number(n)]
                    if hi > lo && *n >= 2.0 && n.fract() == 0.0 =>
                {
                    axes.insert(ax.to_string(), [*lo, *hi, *n]);
                }
                _ => diags.push(diag(path, line, "grid axes are [lo, hi, n] with lo < hi and integer n ≥ 2".into())),
            },
            ("grid", _, _) => diags.push(diag(path, line, "grid keys are x1, x2 and t".into())),
            ("tolerance", t, Value::Number(v)) if sc.tolerances.iter().any(|o| o.0 == t) => {
                if *v > 0.0 {
                    tolerances.insert(t.to_string(), *v);
                } else {
                    diags.push(diag(path, line, "tolerances must be positive".into()));
                }
            }
            ("tolerance", _, _) => {
                let names: Vec<_> = sc.tolerances.iter().map(|t| t.0).collect();
                diags.push(diag(path, line, format!("unknown tolerance; {} has {}", kind.name(), names.join(", "))));
            }
            _ => diags.push(diag(path, line, "unknown key".into())),
        }
    }

    for c in sc.required_constants {
        if !constants.contains_key(*c) {
            diags.push(diag(format!("/constants/{c}"), None, format!("missing required constant `{c}`")));
        }
    }
    for e in sc.required_expressions {
        let written = doc.entries.iter().any(|d| d.0 == format!("expressions.{e}"));
        if !written {
            diags.push(diag(format!("/expressions/{e}"), None, format!("missing required expression `{e}`")));
        }
    }
    for (c, v) in sc.optional_constants {
        constants.entry(c.to_string()).or_insert(*v);
    }
    for (e, v) in sc.optional_expressions {
        expressions.entry(e.to_string()).or_insert_with(|| v.to_string());
    }
    for (t, v) in sc.tolerances {
        tolerances.entry(t.to_string()).or_insert(*v);
    }
    let grid = if sc.needs_grid {
        match (axes.get("x1"), axes.get("x2"), axes.get("t")) {
            (Some(a), Some(b), Some(c)) => Some(GridSpec { x1: *a, x2: *b, t: *c }),
            _ => {
                for ax in ["x1", "x2", "t"] {
                    if !axes.contains_key(ax) {
                        diags.push(diag(format!("/grid/{ax}"), None, format!("missing grid axis `{ax}`")));
                    }
                }
                None
            }
        }
    } else {
        if !axes.is_empty() {
            diags.push(diag("/grid".into(), None, format!("{} takes no grid", kind.name())));
        }
        None
    };

    if diags.is_empty() {
        let outputs = outputs.unwrap_or_else(|| sc.outputs.iter().map(|s| s.to_string()).collect());
        Ok(Scenario { kind, name, seed, constants, expressions, grid, outputs, tolerances })
    } else {
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "afdm-lc"   # exponential family
constants.Lambda = 1
expressions.phi_check = "exp(x1 + x2 + t)"
grid.x1 = [0.2, 0.8, 5]
grid.x2 = [0.2, 0.8, 5]
grid.t = [0.1, 0.9, 5]
"#;

    #[test]
    fn minimal_scenario_is_valid() {
        let s = parse_scenario(MINIMAL, "minimal").unwrap();
        assert_eq!(s.kind, Kind::AfdmLc);
        assert_eq!(s.constant("Lambda"), 1.0);
        assert_eq!(s.expression("n_potential"), "0");
        assert_eq!(s.tolerances["einstein"], 1e-6);
        assert!(s.wants("metric"));
    }

    #[test]
    fn missing_lambda_is_named() {
        let text = MINIMAL.replace("constants.Lambda = 1", "");
        let d = parse_scenario(&text, "x").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "/constants/Lambda");
        assert!(d[0].message.contains("Lambda"));
    }

    #[test]
    fn expression_error_carries_offset() {
        let text = MINIMAL.replace("exp(x1 + x2 + t)", "exp(x1 +");
        let d = parse_scenario(&text, "x").unwrap_err();
        assert_eq!(d[0].path, "/expressions/phi_check");
        assert_eq!(d[0].offset, Some(8));
        assert_eq!(d[0].line, Some(4));
    }

    #[test]
    fn values_and_syntax_errors() {
        let doc = read_document("a = -2.5e-1\nb = [1, \"x\", y]\nc = []").unwrap();
        assert_eq!(doc.entries[0].1, Value::Number(-0.25));
        assert_eq!(
            doc.entries[1].1,
            Value::List(vec![Value::Number(1.0), Value::Text("x".into()), Value::Text("y".into())])
        );
        assert_eq!(doc.entries[2].1, Value::List(vec![]));
        let d = read_document("a = [1, 2\nb 3\na = 1\na = 2").unwrap_err();
        assert_eq!(d.len(), 3);
        assert_eq!((d[0].line, d[0].offset), (Some(1), Some(9)));
        assert_eq!((d[1].line, d[1].offset), (Some(2), Some(2)));
        assert_eq!((d[2].line, d[2].path.as_str()), (Some(4), "/a"));
    }

    #[test]
    fn schema_violations_are_collected() {
        let text = "kind = \"dedm\"\nconstants.varpi = -1.2\nconstants.bogus = 1\noutputs = [\"trajectory\", \"nope\"]\ngrid.x1 = [0, 1, 3]";
        let d = parse_scenario(text, "x").unwrap_err();
        let paths: Vec<_> = d.iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, ["/constants/bogus", "/outputs/1", "/constants/Q", "/grid"]);
        let d = parse_scenario("kind = \"nope\"", "x").unwrap_err();
        assert!(d[0].message.contains("afdm-lc"));
    }
}
