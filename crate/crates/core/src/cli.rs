//! Command-line front end. Every command prints one JSON document with a
//! `provenance` block and a `report`.
//!
//! Exit codes: 0 success, 1 other runtime failure, 2 invalid configuration,
//! 3 compatibility violation, 4 certification failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::convergence::{certify, Verdict};
use crate::error::{Error, Result};
use crate::laurent::{build_series, enumerate_branches_report, BranchSpec, Resolution, RootBranch, SeriesCase};
use crate::painleve::{candidate_c_values, classify};
use crate::scalar::{parse_rational_literal, Scalar, DEFAULT_PRECISION, MIN_PRECISION};
use crate::series::{PuiseuxSeries, SeriesJson};
use crate::subequation::{fit, residue_pairing, SubequationAnsatz};
use crate::verify::{energy_split, residual_max, verify_series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPATIBILITY: i32 = 3;
pub const EXIT_CERTIFICATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hh-painleve", version, about = "Painleve analysis and local series for the generalized Henon-Heiles system")]
pub struct Cli {
    /// Working precision in bits for rounded arithmetic.
    #[arg(long, global = true, env = "PAINLEVE_PRECISION_BITS", default_value_t = DEFAULT_PRECISION)]
    pub precision_bits: usize,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for randomized sampling (sweep).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dominant balances, resonances and the classification verdict for C.
    Analyze {
        #[arg(long = "C", allow_hyphen_values = true)]
        c: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        lambda: String,
    },
    /// Build one local series branch.
    Series {
        #[command(flatten)]
        branch: BranchArgs,
        /// Include every recurrence step in the report.
        #[arg(long)]
        steps: bool,
    },
    /// Convergence certificate for one branch.
    Certify {
        #[command(flatten)]
        branch: BranchArgs,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        /// Largest M tried.
        #[arg(long, default_value = "1048576")]
        m_limit: String,
    },
    /// Fit a first-order polynomial subequation to a series file.
    Fit {
        /// A series JSON file, or a `series` report (its `y` component is used).
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Number of matched powers of t (default: unknowns + 5).
        #[arg(long)]
        match_order: Option<usize>,
    },
    /// Residual, energy constancy and a numeric cross-check.
    Verify {
        #[command(flatten)]
        branch: BranchArgs,
        /// Re-verify the series stored in a `series` report instead of building one.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long, default_value = "3/10")]
        t_start: String,
        #[arg(long, default_value = "1/2")]
        t_end: String,
        #[arg(long, default_value = "1e-20")]
        tol: String,
        #[arg(long)]
        no_numeric: bool,
    },
    /// Branch structure over a grid of lambda values.
    Sweep {
        #[arg(long = "case")]
        case: String,
        /// `start:stop:step`, decimals read exactly.
        #[arg(long, allow_hyphen_values = true)]
        lambda_grid: String,
        #[arg(long)]
        complex_branches: bool,
        /// Truncation order used for the per-branch residual check.
        #[arg(long = "N", default_value_t = 12)]
        n: i64,
        /// Extra builds per branch with random free parameters.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct BranchArgs {
    #[arg(long = "case", default_value = "C165")]
    pub case: String,
    #[arg(long, default_value = "1/9", allow_hyphen_values = true)]
    pub lambda: String,
    /// plus, minus or zero (C43 only).
    #[arg(long, default_value = "plus")]
    pub branch: String,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub x_sign: i8,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub residue_sign: i8,
    /// Multiply c1 by i (C165).
    #[arg(long)]
    pub quarter_turn: bool,
    /// Free parameters: (a2, b4) for C165, (f2, f4) for C43.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], allow_hyphen_values = true)]
    pub free: Option<Vec<String>>,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub t0: String,
    #[arg(long = "N", default_value_t = 30)]
    pub n: i64,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}

fn scalar_arg(name: &str, s: &str, bits: usize) -> Result<Scalar> {
    Scalar::parse_literal(s, bits).ok_or_else(|| Error::Parse(format!("--{name}: cannot read '{s}' as a number")))
}

impl BranchArgs {
    pub fn to_spec(&self, bits: usize) -> Result<BranchSpec> {
        let case = SeriesCase::parse(&self.case).ok_or_else(|| config_error(format!("unknown case '{}'", self.case)))?;
        let rb = RootBranch::parse(&self.branch).ok_or_else(|| config_error(format!("unknown branch '{}'", self.branch)))?;
        let mut spec = BranchSpec::new(case, scalar_arg("lambda", &self.lambda, bits)?, rb)
            .with_x_sign(self.x_sign)
            .with_residue_sign(self.residue_sign)
            .with_quarter_turn(self.quarter_turn)
            .with_t0(scalar_arg("t0", &self.t0, bits)?)
            .with_bits(bits);
        if let Some(free) = &self.free {
            spec = spec.with_free_params(scalar_arg("free", &free[0], bits)?, scalar_arg("free", &free[1], bits)?);
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Maps library errors onto process exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ContractViolation(_) | Error::UnsupportedParameter(_) | Error::Parse(_) => EXIT_CONFIG,
        Error::CompatibilityViolation { .. } => EXIT_COMPATIBILITY,
        Error::InsufficientPrefix { .. } => EXIT_CERTIFICATION,
        Error::SingularityApproach { .. } | Error::Io(_) | Error::Json(_) => EXIT_RUNTIME,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ContractViolation(_) => "contract-violation",
        Error::UnsupportedParameter(_) => "unsupported-parameter",
        Error::CompatibilityViolation { .. } => "compatibility-violation",
        Error::InsufficientPrefix { .. } => "insufficient-prefix",
        Error::SingularityApproach { .. } => "singularity-approach",
        Error::Parse(_) => "parse-error",
        Error::Io(_) => "io-error",
        Error::Json(_) => "json-error",
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn series_report(spec: &BranchSpec, n: i64, with_steps: bool) -> Result<Value> {
    let sol = build_series(spec, n)?;
    let residual = residual_max(spec, &sol.x, &sol.y)?;
    let (_, drift) = energy_split(spec, &sol.x, &sol.y)?;
    let singular: Vec<Value> = sol
        .steps
        .iter()
        .filter(|s| s.resolution != Resolution::Unique)
        .map(|s| json!({"k": s.k, "det": s.det, "resolution": s.resolution}))
        .collect();
    let mut report = json!({
        "spec": spec,
        "label": spec.label(),
        "N": sol.n(),
        "H": sol.h,
        "residual_max": residual,
        "energy_nonconstant_max": drift,
        "singular_steps": singular,
        "x": sol.x.to_json(),
        "y": sol.y.to_json(),
    });
    if with_steps {
        report["steps"] = to_value(&sol.steps)?;
    }
    Ok(report)
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Accepts a whole report document or its `report` member.
fn report_body(doc: Value) -> Value {
    match doc.get("report") {
        Some(r) => r.clone(),
        None => doc,
    }
}

fn series_from_value(v: &Value) -> Result<PuiseuxSeries> {
    let sj: SeriesJson = serde_json::from_value(v.clone())?;
    PuiseuxSeries::from_json(&sj)
}

/// Exact grid `start, start + step, …, ≤ stop`.
pub fn parse_grid(s: &str) -> Result<Vec<Scalar>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("lambda grid '{s}' is not start:stop:step")));
    }
    let q = |p: &str| parse_rational_literal(p).ok_or_else(|| Error::Parse(format!("bad grid value '{p}'")));
    let (a, b, h) = (q(parts[0])?, q(parts[1])?, q(parts[2])?);
    if h <= num_rational::BigRational::from_integer(0.into()) {
        return Err(config_error("grid step must be positive"));
    }
    let mut out = Vec::new();
    let mut v = a;
    while v <= b {
        out.push(Scalar::from_rational(v.clone()));
        v += &h;
        if out.len() > 100_000 {
            return Err(config_error("grid has more than 100000 points"));
        }
    }
    Ok(out)
}

fn random_free(rng: &mut ChaCha8Rng) -> (Scalar, Scalar) {
    let mut draw = || Scalar::ratio(rng.gen_range(-20..=20), rng.gen_range(1..=10));
    (draw(), draw())
}

fn sweep_point(case: SeriesCase, lambda: &Scalar, complex: bool, n: i64, bits: usize, seed: u64, samples: usize) -> Value {
    let enumeration = match enumerate_branches_report(case, lambda, complex) {
        Ok(e) => e,
        Err(e) => return json!({"lambda": lambda, "error": e.to_string()}),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Scalar::zero();
    let mut built = Vec::new();
    let mut failures = Vec::new();
    for spec in &enumeration.branches {
        let mut specs = vec![spec.clone().with_bits(bits)];
        for _ in 0..samples {
            let (p, q) = random_free(&mut rng);
            specs.push(spec.clone().with_bits(bits).with_free_params(p, q));
        }
        for (i, s) in specs.iter().enumerate() {
            match build_series(s, n).and_then(|sol| Ok((residual_max(s, &sol.x, &sol.y)?, sol))) {
                Ok((r, sol)) => {
                    if r.cmp_abs(&worst).is_gt() {
                        worst = r;
                    }
                    if i == 0 {
                        built.push((s.clone(), sol.y));
                    }
                }
                Err(e) => failures.push(json!({"label": s.label(), "free_params": s.free_params, "error": e.to_string()})),
            }
        }
    }
    let pairing = residue_pairing(&built).ok();
    json!({
        "lambda": lambda,
        "branch_count": enumeration.branches.len(),
        "branches": enumeration.branches.iter().map(BranchSpec::label).collect::<Vec<_>>(),
        "merge": !enumeration.merged.is_empty(),
        "merged": enumeration.merged.iter().map(|(s, into)| json!({"label": s.label(), "into": into})).collect::<Vec<_>>(),
        "rejected": enumeration.rejected.iter().map(|(s, why)| json!({"label": s.label(), "reason": why})).collect::<Vec<_>>(),
        "residue_pairing": pairing,
        "residual_max": worst,
        "failures": failures,
    })
}

/// Runs one command; `Ok((report, exit_code))` or a library error.
pub fn execute(cli: &Cli) -> Result<(Value, i32)> {
    let bits = cli.precision_bits;
    if bits < MIN_PRECISION {
        return Err(config_error(format!("precision {bits} below the {MIN_PRECISION}-bit minimum")));
    }
    match &cli.command {
        Command::Analyze { c, lambda } => {
            let c = scalar_arg("C", c, bits)?;
            let lambda = scalar_arg("lambda", lambda, bits)?;
            let verdict = classify(&c, &lambda)?;
            Ok((
                json!({
                    "C": c,
                    "lambda": lambda,
                    "label": verdict.label.as_str(),
                    "verdict": verdict,
                    "candidates": candidate_c_values(),
                }),
                EXIT_OK,
            ))
        }
        Command::Series { branch, steps } => {
            let spec = branch.to_spec(bits)?;
            Ok((series_report(&spec, branch.n, *steps)?, EXIT_OK))
        }
        Command::Certify { branch, epsilon, m_limit } => {
            let spec = branch.to_spec(bits)?;
            let sol = build_series(&spec, branch.n)?;
            let cert = certify(&sol, &scalar_arg("epsilon", epsilon, bits)?, &scalar_arg("m-limit", m_limit, bits)?)?;
            let code = if cert.verdict == Verdict::Certified { EXIT_OK } else { EXIT_CERTIFICATION };
            Ok((json!({"label": spec.label(), "certificate": cert}), code))
        }
        Command::Fit { series, m, match_order } => {
            let body = report_body(read_json(series)?);
            let y = match body.get("y") {
                Some(y) => series_from_value(y)?,
                None => series_from_value(&body)?,
            };
            let unknowns = SubequationAnsatz::index_set(*m).len();
            let result = fit(&y, *m, match_order.unwrap_or(unknowns + 5))?;
            let equations: Vec<String> = result.basis.iter().map(|b| b.h.render()).collect();
            Ok((json!({"fit": result, "equations": equations}), EXIT_OK))
        }
        Command::Verify { branch, from, t_start, t_end, tol, no_numeric } => {
            let (spec, x, y) = match from {
                Some(path) => {
                    let body = report_body(read_json(path)?);
                    let spec: BranchSpec = serde_json::from_value(
                        body.get("spec").cloned().ok_or_else(|| config_error("report has no spec"))?,
                    )?;
                    let x = series_from_value(body.get("x").ok_or_else(|| config_error("report has no x"))?)?;
                    let y = series_from_value(body.get("y").ok_or_else(|| config_error("report has no y"))?)?;
                    (spec, x, y)
                }
                None => {
                    let spec = branch.to_spec(bits)?;
                    let sol = build_series(&spec, branch.n)?;
                    (spec, sol.x, sol.y)
                }
            };
            let (a, b, t) = (
                scalar_arg("t-start", t_start, bits)?,
                scalar_arg("t-end", t_end, bits)?,
                scalar_arg("tol", tol, bits)?,
            );
            let span = (!no_numeric).then_some((&a, &b, &t));
            Ok((to_value(&verify_series(&spec, &x, &y, span)?)?, EXIT_OK))
        }
        Command::Sweep { case, lambda_grid, complex_branches, n, samples } => {
            let case = SeriesCase::parse(case).ok_or_else(|| config_error(format!("unknown case '{case}'")))?;
            if *n < 5 {
                return Err(config_error(format!("N = {n} must be at least 5")));
            }
            let grid = parse_grid(lambda_grid)?;
            let points: Vec<Value> = grid
                .par_iter()
                .enumerate()
                .map(|(i, l)| sweep_point(case, l, *complex_branches, *n, bits, cli.seed.wrapping_add(i as u64), *samples))
                .collect();
            Ok((json!({"case": case, "points": points}), EXIT_OK))
        }
    }
}

fn provenance(cli: &Cli, argv: &[String]) -> Value {
    json!({
        "tool": "hh-painleve",
        "version": env!("CARGO_PKG_VERSION"),
        "argv": argv,
        "precision_bits": cli.precision_bits,
        "seed": cli.seed,
    })
}

fn emit(cli: &Cli, doc: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    match &cli.output {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok((report, code)) => {
            let doc = json!({"provenance": provenance(&cli, &argv), "report": report});
            match emit(&cli, &doc) {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            let mut err = json!({"error": error_kind(&e), "message": e.to_string()});
            if let Error::CompatibilityViolation { k, .. } = &e {
                err["k"] = json!(k);
            }
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap_or_else(|_| e.to_string()));
            exit_code(&e)
        }
    }
}
