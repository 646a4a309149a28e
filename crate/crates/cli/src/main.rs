use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use afdm_cli::output::{emit, Format};
use afdm_cli::run::{run_scenario, RunOptions};
use afdm_cli::scenario::{parse_scenario, Diagnostic};
use afdm_cli::{bundled, BUNDLED};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "afdm", version, about = "Run and validate workbench scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check scenario files and report every problem found.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run scenario files or bundled scenarios by name.
    Run {
        #[arg(required = true)]
        targets: Vec<String>,
        /// Each scenario writes into a subdirectory named after it.
        #[arg(long, default_value = "afdm-out")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Grid nodes per axis: `n` or `n1,n2,nt`.
        #[arg(long, value_delimiter = ',')]
        sample: Option<Vec<usize>>,
        /// Replace every tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Replace one tolerance, as `name=value`; may repeat.
        #[arg(long = "tol", value_parser = parse_tol)]
        tol: Vec<(String, f64)>,
    },
    /// List the bundled scenarios.
    ListScenarios,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad tolerance `{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn print_diagnostics(source: &str, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{source}: {d}");
    }
}

fn load(target: &str) -> Result<(String, String), String> {
    let path = Path::new(target);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{target}: {e}"))?;
        let stem = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        return Ok((stem, text));
    }
    bundled(target)
        .map(|text| (target.to_string(), text.to_string()))
        .ok_or_else(|| format!("{target}: no such file or bundled scenario"))
}

fn now() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return epoch;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

enum Status {
    Passed,
    Failed,
    Error,
}

fn run_one(target: &str, out_dir: &Path, format: Format, opts: &RunOptions) -> Status {
    let (stem, text) = match load(target) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Status::Error;
        }
    };
    let sc = match parse_scenario(&text, &stem) {
        Ok(sc) => sc,
        Err(diags) => {
            print_diagnostics(target, &diags);
            return Status::Error;
        }
    };
    let started = now();
    let outcome = match run_scenario(&sc, opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", sc.name);
            return Status::Error;
        }
    };
    let dir = out_dir.join(&sc.name);
    if let Err(e) = emit(&dir, &sc, &text, &outcome, format, started, now()) {
        eprintln!("error: writing {}: {e}", dir.display());
        return Status::Error;
    }
    let mut lines =
        vec![format!("{} {} ({})", if outcome.passed() { "PASS" } else { "FAIL" }, sc.name, sc.kind.name())];
    for c in &outcome.checks {
        lines.push(format!(
            "  [{}] {} = {:.3e} (tolerance {:.1e})",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        ));
    }
    println!("{}", lines.join("\n"));
    if outcome.passed() {
        Status::Passed
    } else {
        Status::Failed
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { paths } => {
            let mut ok = true;
            for p in &paths {
                let source = p.display().to_string();
                let stem = p.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
                match std::fs::read_to_string(p) {
                    Err(e) => {
                        eprintln!("{source}: {e}");
                        ok = false;
                    }
                    Ok(text) => match parse_scenario(&text, &stem) {
                        Ok(sc) => println!("{source}: ok ({})", sc.kind.name()),
                        Err(diags) => {
                            print_diagnostics(&source, &diags);
                            ok = false;
                        }
                    },
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Run { targets, out_dir, format, sample, tolerance, tol } => {
            let opts = RunOptions { sample, tolerance, overrides: tol.into_iter().collect::<BTreeMap<_, _>>() };
            let statuses: Vec<Status> = targets.par_iter().map(|t| run_one(t, &out_dir, format, &opts)).collect();
            if statuses.iter().any(|s| matches!(s, Status::Error)) {
                ExitCode::from(2)
            } else if statuses.iter().any(|s| matches!(s, Status::Failed)) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::ListScenarios => {
            for (name, text) in BUNDLED {
                let kind = parse_scenario(text, name).map(|s| s.kind.name()).unwrap_or("invalid");
                println!("{name}\t{kind}");
            }
            ExitCode::SUCCESS
        }
    }
}
