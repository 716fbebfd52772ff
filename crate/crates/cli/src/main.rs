use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gjx::catalog::{self, describe_failure, MinimalFunctionSpec};
use gjx::geometry::grid_points;
use gjx::pipeline::{
    choose_params_lab, choose_params_strict, run_pipeline, LabOverrides, PipelineOptions, PipelineParams,
    PipelineResult, STAGE_NAMES,
};
use gjx::verify::{
    cut_validity_demo, distance_certificate, extreme_preconditions, minimality_certificate, random_point,
    Certificate, CheckOptions, CutReport, Verdict,
};
use gjx::{Error, GridFunction, PwlExpr, RatVec, Rational};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INDETERMINATE: u8 = 4;

#[derive(Parser)]
#[command(name = "gjx", version, about = "Build and certify piecewise linear extreme functions for the infinite group relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in minimal functions.
    Catalog,
    /// Run the construction and write a bundle directory.
    Build(BuildArgs),
    /// Certify minimality (or the extreme-function hypotheses) of a function.
    Verify(VerifyArgs),
    /// Certified bounds on the sup-norm distance between two functions.
    Distance(DistanceArgs),
    /// Evaluate the cut of a minimal function on feasible tableau-row solutions.
    DemoCut(DemoCutArgs),
    /// Sample a function on a grid and write CSV.
    ExportPlot(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Strict,
    Lab,
}

#[derive(Args, Clone)]
struct CheckArgs {
    /// Grid step for exhaustive checks, as p/q.
    #[arg(long)]
    resolution: Option<Rational>,
    /// Random probes.
    #[arg(long, default_value_t = 1000)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of pairs an exhaustive sweep may visit.
    #[arg(long)]
    budget_pairs: Option<u128>,
}

impl CheckArgs {
    fn options(&self) -> CheckOptions {
        let mut o = CheckOptions {
            resolution: self.resolution.clone(),
            probes: self.probes,
            seed: self.seed,
            ..Default::default()
        };
        if let Some(b) = self.budget_pairs {
            o.pair_budget = b;
        }
        o
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Catalog name (see `gjx catalog`) or grid file.
    #[arg(long)]
    spec: String,
    /// JSON parameter document.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    eps: Option<Rational>,
    #[arg(long)]
    delta1: Option<Rational>,
    #[arg(long)]
    delta2: Option<Rational>,
    #[arg(long)]
    delta3: Option<Rational>,
    #[arg(long)]
    delta4: Option<Rational>,
    #[arg(long)]
    tau: Option<u64>,
    /// Probe step for distances when they cannot be computed exactly.
    #[arg(long)]
    distance_resolution: Option<Rational>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Catalog name, grid file, stage file or spec document.
    #[arg(long)]
    spec: String,
    /// Right-hand side, required for stage files that do not carry it.
    #[arg(long)]
    b: Option<RatVec>,
    /// Also check the slope count and dimension hypotheses against these gradients
    /// (`;`-separated vectors).
    #[arg(long)]
    gradients: Option<String>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
    /// Probe grid step.
    #[arg(long, default_value = "1/256")]
    resolution: Rational,
    /// PASS iff the upper bound is below this value.
    #[arg(long, default_value = "1")]
    eps: Rational,
    #[arg(long)]
    budget_pairs: Option<u128>,
}

#[derive(Args)]
struct DemoCutArgs {
    #[arg(long)]
    spec: String,
    /// Columns p^(i), `;`-separated vectors.
    #[arg(long)]
    columns: Option<String>,
    /// Nonnegative integer solution y, comma-separated.
    #[arg(long)]
    solution: Option<String>,
    /// Number of random feasible instances instead of an explicit one.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExportArgs {
    /// Catalog name, grid file, stage file, or a bundle directory.
    #[arg(long)]
    spec: String,
    /// Stage name when `--spec` is a bundle directory.
    #[arg(long, default_value = "pi_sym")]
    stage: String,
    #[arg(long)]
    resolution: Rational,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    budget_pairs: Option<u128>,
}

/// Parameter document accepted by `build --params`.
#[derive(Serialize, Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    mode: Option<ModeArg>,
    eps: Option<Rational>,
    delta1: Option<Rational>,
    delta2: Option<Rational>,
    delta3: Option<Rational>,
    delta4: Option<Rational>,
    tau: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Budget { .. }) => EXIT_BUDGET,
            Failure::Core(Error::CertificateFailed { certificate, .. }) => match certificate.verdict {
                Verdict::Indeterminate => EXIT_INDETERMINATE,
                _ => EXIT_FAIL,
            },
            _ => EXIT_USAGE,
        }
    }

    fn document(&self) -> serde_json::Value {
        let (kind, message, cert) = match self {
            Failure::Usage(m) => ("usage", m.clone(), None),
            Failure::Other(e) => ("usage", format!("{e:#}"), None),
            Failure::Core(e) => {
                let kind = match e {
                    Error::Budget { .. } => "budget",
                    Error::CertificateFailed { .. } => "certificate_failed",
                    Error::InvalidB(_) => "invalid_b",
                    Error::Parse(_) | Error::Json(_) => "parse",
                    Error::Io(_) => "io",
                    _ => "precondition",
                };
                let cert = match e {
                    Error::CertificateFailed { certificate, .. } => Some(certificate.as_ref().clone()),
                    _ => None,
                };
                (kind, e.to_string(), cert)
            }
        };
        let mut doc = serde_json::json!({ "error": kind, "message": message, "exit_code": self.exit_code() });
        if let Some(c) = cert {
            doc["certificate"] = serde_json::to_value(c).unwrap_or_default();
        }
        doc
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Catalog => cmd_catalog(),
        Command::Build(a) => cmd_build(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Distance(a) => cmd_distance(a),
        Command::DemoCut(a) => cmd_demo_cut(a),
        Command::ExportPlot(a) => cmd_export_plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", serde_json::to_string_pretty(&f.document()).unwrap_or_default());
            ExitCode::from(f.exit_code())
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn parse_vectors(s: &str) -> Result<Vec<RatVec>, Failure> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<RatVec>().map_err(|e| Failure::Usage(e.to_string())))
        .collect()
}

fn cmd_catalog() -> CmdResult {
    for e in catalog::catalog_entries() {
        println!("{:<28} {} (e.g. {})", e.pattern, e.description, e.example);
    }
    Ok(0)
}

/// A function loaded from the command line: either a registered spec or a bare expression.
struct Loaded {
    expr: Arc<PwlExpr>,
    b: Option<RatVec>,
}

/// Load a catalog name, grid document, spec document or stage file without registering it.
fn load_function(name: &str) -> Result<Loaded, Failure> {
    let path = Path::new(name);
    if !path.exists() {
        let spec = catalog::resolve(name)?;
        return Ok(Loaded {
            b: Some(spec.b.clone()),
            expr: spec.expr,
        });
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("values").is_some() {
        let grid: GridFunction = serde_json::from_value(value)?;
        return Ok(Loaded {
            b: Some(grid.b().clone()),
            expr: Arc::new(PwlExpr::grid(grid)),
        });
    }
    if value.get("expr").is_some() {
        let spec: MinimalFunctionSpec = serde_json::from_value(value)?;
        return Ok(Loaded {
            b: Some(spec.b.clone()),
            expr: spec.expr,
        });
    }
    let expr: PwlExpr = serde_json::from_value(value)?;
    let b = match &expr {
        PwlExpr::Symmetrize { b, .. } => Some(b.clone()),
        PwlExpr::Gmic { b } => Some(RatVec::new(vec![b.clone()])),
        _ => None,
    };
    Ok(Loaded {
        expr: Arc::new(expr),
        b,
    })
}

fn build_params(a: &BuildArgs, spec: &MinimalFunctionSpec) -> Result<PipelineParams, Failure> {
    let mut doc = match &a.params {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<ParamsDoc>(&text)?
        }
        None => ParamsDoc::default(),
    };
    macro_rules! overlay {
        ($($f:ident),*) => { $( if a.$f.is_some() { doc.$f = a.$f.clone(); } )* };
    }
    overlay!(mode, eps, delta1, delta2, delta3, delta4, tau);
    let eps = doc
        .eps
        .clone()
        .ok_or_else(|| Failure::Usage("--eps (or eps in the parameter document) is required".into()))?;
    match doc.mode.unwrap_or(ModeArg::Strict) {
        ModeArg::Strict => Ok(choose_params_strict(spec, &eps)?),
        ModeArg::Lab => {
            let need = |d: &Option<Rational>, name: &str| {
                d.clone()
                    .ok_or_else(|| Failure::Usage(format!("lab mode requires {name}")))
            };
            let o = LabOverrides {
                eps,
                delta1: need(&doc.delta1, "delta1")?,
                delta2: need(&doc.delta2, "delta2")?,
                delta3: need(&doc.delta3, "delta3")?,
                delta4: need(&doc.delta4, "delta4")?,
                tau: doc.tau,
            };
            Ok(choose_params_lab(spec, &o)?)
        }
    }
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Write the stage files, parameters and certificates of a run.
fn write_bundle(dir: &Path, spec: &MinimalFunctionSpec, result: &PipelineResult) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("spec.json"), to_pretty(spec)?)?;
    for stage in &result.stages {
        fs::write(dir.join(format!("{}.json", stage.name)), to_pretty(stage.expr.as_ref())?)?;
    }
    fs::write(dir.join("params.json"), to_pretty(&result.params)?)?;
    let report = serde_json::json!({
        "verdict": result.verdict(),
        "succeeded": result.succeeded(),
        "distances": result.distances,
        "certificates": result.certificates,
    });
    fs::write(dir.join("certificates.json"), to_pretty(&report)?)?;
    Ok(())
}

fn cmd_build(a: BuildArgs) -> CmdResult {
    let spec = catalog::resolve(&a.spec)?;
    let params = build_params(&a, &spec)?;
    let mut opts = PipelineOptions {
        check: a.check.options(),
        ..Default::default()
    };
    if let Some(d) = &a.distance_resolution {
        opts.distance_delta = d.clone();
    }
    let result = run_pipeline(&spec, &params, &opts)?;
    write_bundle(&a.out, &spec, &result)?;
    let verdict = result.verdict();
    println!(
        "{}: {:?}; ‖π − π_sym‖∞ ≤ {} ≈ {}; bundle written to {}",
        spec.name,
        verdict,
        result.distances.total_upper,
        result.distances.total_upper.to_decimal_string(6),
        a.out.display()
    );
    for c in &result.certificates {
        println!("  {:<36} {:?} ({:?})", c.label, c.certificate.verdict, c.certificate.mode);
    }
    Ok(verdict_code(verdict))
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let f = load_function(&a.spec)?;
    let b = a
        .b
        .clone()
        .or(f.b.clone())
        .ok_or_else(|| Failure::Usage("--b is required for this input".into()))?;
    gjx::gauge::check_b(&b)?;
    let opts = a.check.options();
    let cert: Certificate = match &a.gradients {
        Some(g) => extreme_preconditions(&f.expr, &b, &parse_vectors(g)?, &opts)?,
        None => minimality_certificate(&f.expr, &b, &opts)?,
    };
    print_json(&cert)?;
    if cert.verdict == Verdict::Fail {
        eprintln!("{}", describe_failure(&cert));
    }
    Ok(verdict_code(cert.verdict))
}

fn cmd_distance(a: DistanceArgs) -> CmdResult {
    let f = load_function(&a.f)?;
    let g = load_function(&a.g)?;
    let budget = a.budget_pairs.unwrap_or_else(gjx::geometry::default_enum_budget);
    let cert = distance_certificate(&f.expr, &g.expr, &a.resolution, &a.eps, false, budget)?;
    print_json(&cert)?;
    Ok(verdict_code(cert.verdict))
}

/// A random feasible instance: `k` random columns with random `y`, and `b` absorbing the rest.
fn random_instance(rng: &mut impl Rng, b: &RatVec) -> (Vec<RatVec>, Vec<u64>) {
    let n = b.dim();
    let k = rng.gen_range(1..=4);
    let mut cols: Vec<RatVec> = (0..k).map(|_| random_point(rng, n, 64)).collect();
    let mut y: Vec<u64> = (0..k).map(|_| rng.gen_range(0..4)).collect();
    let mut sum = RatVec::zeros(n);
    for (c, &yi) in cols.iter().zip(&y) {
        sum = &sum + &c.scale(&Rational::from(yi));
    }
    cols.push((b - &sum).fract());
    y.push(1);
    (cols, y)
}

fn cmd_demo_cut(a: DemoCutArgs) -> CmdResult {
    let f = load_function(&a.spec)?;
    let b = f
        .b
        .clone()
        .ok_or_else(|| Failure::Usage("the spec does not carry b".into()))?;
    let reports: Vec<CutReport> = match (a.random, &a.columns, &a.solution) {
        (Some(count), _, _) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..count)
                .map(|_| {
                    let (cols, y) = random_instance(&mut rng, &b);
                    cut_validity_demo(&f.expr, &b, &cols, &y)
                })
                .collect::<Result<_, _>>()?
        }
        (None, Some(c), Some(s)) => {
            let cols = parse_vectors(c)?;
            let y: Vec<u64> = s
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Failure::Usage(format!("bad solution entry {t}"))))
                .collect::<Result<_, _>>()?;
            vec![cut_validity_demo(&f.expr, &b, &cols, &y)?]
        }
        _ => return Err(Failure::Usage("give --columns and --solution, or --random N".into())),
    };
    print_json(&reports)?;
    Ok(if reports.iter().all(|r| r.satisfied) { 0 } else { EXIT_FAIL })
}

fn load_export_target(a: &ExportArgs) -> Result<Arc<PwlExpr>, Failure> {
    let path = Path::new(&a.spec);
    if path.is_dir() {
        if !STAGE_NAMES.contains(&a.stage.as_str()) && a.stage != "spec" {
            return Err(Failure::Usage(format!(
                "unknown stage {}; expected one of {}",
                a.stage,
                STAGE_NAMES.join(", ")
            )));
        }
        return Ok(load_function(&path.join(format!("{}.json", a.stage)).display().to_string())?.expr);
    }
    Ok(load_function(&a.spec)?.expr)
}

fn cmd_export_plot(a: ExportArgs) -> CmdResult {
    let f = load_export_target(&a)?;
    let n = f.dim();
    let points = grid_points(n, &a.resolution)?;
    let budget = a.budget_pairs.unwrap_or_else(gjx::geometry::default_enum_budget);
    let rows = points.len() as u128;
    if rows > budget {
        return Err(Error::Budget { requested: rows, budget }.into());
    }
    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    header.push("decimal".into());
    w.write_record(&header).map_err(anyhow::Error::from)?;
    for x in points {
        let v = f.eval(&x);
        let mut rec: Vec<String> = x.iter().map(Rational::to_fraction_string).collect();
        rec.push(v.to_fraction_string());
        rec.push(v.to_decimal_string(12));
        w.write_record(&rec).map_err(anyhow::Error::from)?;
    }
    w.flush()?;
    Ok(0)
}
