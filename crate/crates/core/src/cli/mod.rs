//! The `ddvv` command line. Every subcommand reads its inputs from files and
//! flags only, and writes a [`ReportDocument`].
//!
//! Exit codes: 0 when the command succeeded and the checked inequality holds,
//! 1 on a violation or an internal failure, 2 on bad input.

mod document;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use document::{check_finite, digest, DocumentKind, ReportDocument, TupleDocument};

use crate::error::Error;
use crate::geometry::{curvature_ellipse, curvature_report, equality_shape_ops, mean_curvature};
use crate::inequality::defect;
use crate::matrix_core::{
    act, comm_norm_sum, matrix_from_rows, matrix_rows, norm_sum, random_orthogonal, GroupElement,
    Matrix, SymmetryClass,
};
use crate::normal_form::{
    detect, detect_shape_equality, make_skew_quaternionic, make_skew_triple3, make_symmetric_pair,
    NormalFormResult,
};
use crate::search::{ascend_ratio, fuzz_inequality, SearchConfig, TrialRecord};
use crate::translation::{
    g_epsilon_member, simplex_max, translate, CommutatorForm, SimplexConfig, SimplexRegion,
    SymBasis,
};

#[derive(Debug, Parser)]
#[command(name = "ddvv", version, about = "Check commutator-norm inequalities for matrix tuples")]
pub struct Cli {
    /// Relative tolerance used by checks and classifiers.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the inequality defect of a tuple document.
    Check { input: PathBuf },
    /// Curvature invariants of a shape_ops document.
    Geom { input: PathBuf },
    /// Translate a symmetric tuple into a point of the simplex.
    Translate { input: PathBuf },
    /// Classify a tuple or shape_ops document against the equality forms.
    NormalForm { input: PathBuf },
    /// Randomized search. CSV columns: trial,seed,ratio,defect,kind.
    Search(SearchArgs),
    /// Maximize f_Q over the shrunken simplex and test G_eps membership.
    Fmax(FmaxArgs),
    /// Write an equality fixture document.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SymmetryArg {
    Symmetric,
    Skew,
}

impl From<SymmetryArg> for SymmetryClass {
    fn from(s: SymmetryArg) -> Self {
        match s {
            SymmetryArg::Symmetric => SymmetryClass::Symmetric,
            SymmetryArg::Skew => SymmetryClass::SkewSymmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchMode {
    Ascend,
    Fuzz,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Symmetric)]
    pub symmetry: SymmetryArg,
    #[arg(long, value_enum, default_value_t = SearchMode::Ascend)]
    pub mode: SearchMode,
    #[arg(long, default_value_t = 64)]
    pub trials: usize,
    /// Iteration cap per ascent run.
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    /// Write per-trial rows as CSV to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FmaxArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// `identity`, `haar`, or a path to a JSON array of rows.
    #[arg(long, default_value = "identity")]
    pub q: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Sympair,
    Skew3,
    Skewquat,
    ShapeEq,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda3: f64,
    /// Ambient curvature of a shape-eq document.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Conjugate by a random element of O(n) x O(m) drawn from --seed.
    #[arg(long)]
    pub conjugate: bool,
    /// Destination file; the document goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Decomposition(_) | Error::NonFinite(_) => Self::internal(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

enum Emit {
    Report { report: ReportDocument, rows: Option<Vec<TrialRecord>> },
    Raw(String),
}

struct Outcome {
    emit: Emit,
    ok: bool,
}

struct Input {
    doc: TupleDocument,
    digest: String,
}

fn load(path: &Path) -> Result<Input, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Failure::input(format!("{} is not UTF-8", path.display())))?;
    Ok(Input {
        doc: TupleDocument::parse(text)?,
        digest: digest(&bytes),
    })
}

fn expect_kind(doc: &TupleDocument, kind: DocumentKind) -> Result<(), Failure> {
    if doc.kind != kind {
        return Err(Failure::input(format!(
            "expected a {} document",
            match kind {
                DocumentKind::Tuple => "tuple",
                DocumentKind::ShapeOps => "shape_ops",
            }
        )));
    }
    Ok(())
}

fn rows(m: &Matrix) -> Value {
    json!(matrix_rows(m))
}

fn normal_form_json(r: &NormalFormResult) -> Value {
    json!({
        "kind": r.kind,
        "parameter": r.parameter,
        "residual": r.residual,
        "p": rows(&r.p),
        "r": rows(&r.r),
    })
}

struct Context<'a> {
    cli: &'a Cli,
    echo: String,
}

impl Context<'_> {
    fn report(&self, input_digest: Option<String>, results: Value) -> ReportDocument {
        ReportDocument {
            command: self.echo.clone(),
            input_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.cli.seed,
            tol: self.cli.tol,
            results,
        }
    }

    fn done(&self, input_digest: Option<String>, results: Value, ok: bool) -> Outcome {
        Outcome {
            emit: Emit::Report {
                report: self.report(input_digest, results),
                rows: None,
            },
            ok,
        }
    }
}

fn cmd_check(ctx: &Context, path: &Path) -> Result<Outcome, Failure> {
    let input = load(path)?;
    expect_kind(&input.doc, DocumentKind::Tuple)?;
    let t = input.doc.tuple()?;
    let r = defect(&t);
    let holds = r.defect >= -ctx.cli.tol * r.scale();
    let mut results = serde_json::to_value(&r).expect("report serializes");
    results["scale"] = json!(r.scale());
    results["holds"] = json!(holds);
    Ok(ctx.done(Some(input.digest), results, holds))
}

fn cmd_geom(ctx: &Context, path: &Path) -> Result<Outcome, Failure> {
    let input = load(path)?;
    expect_kind(&input.doc, DocumentKind::ShapeOps)?;
    let s = input.doc.shape_ops()?;
    if s.n() < 2 {
        return Err(Failure::input(format!("need n >= 2, got n = {}", s.n())));
    }
    let r = curvature_report(&s)?;
    let tol = ctx.cli.tol;
    let mut results = serde_json::to_value(&r).expect("report serializes");
    results["mean_curvature"] = json!(mean_curvature(&s));
    results["wintgen_equality"] = json!(r.wintgen_defect.abs() <= tol * r.scale);
    if s.n() == 2 {
        let e = curvature_ellipse(&s)?;
        results["ellipse"] = json!({
            "center": e.center,
            "u": e.u,
            "v": e.v,
            "circle": e.is_circle(tol),
        });
    }
    let holds = r.wintgen_defect >= -tol * r.scale;
    Ok(ctx.done(Some(input.digest), results, holds))
}

fn cmd_translate(ctx: &Context, path: &Path) -> Result<Outcome, Failure> {
    let input = load(path)?;
    expect_kind(&input.doc, DocumentKind::Tuple)?;
    let t = input.doc.tuple()?;
    if t.symmetry() != SymmetryClass::Symmetric {
        return Err(Failure::input("translate needs a symmetric tuple"));
    }
    let tr = translate(&t)?;
    let ns = norm_sum(&t);
    let scale = 1.0 + ns * ns;
    let bound = ctx.cli.tol * scale;
    let ok = tr.residuals.norm <= bound && tr.residuals.commutator <= bound;
    let results = json!({
        "coefficients": rows(&tr.vectorization.coeffs),
        "x": tr.frame.x,
        "q": rows(&tr.frame.q),
        "f_value": tr.f_value,
        "target": comm_norm_sum(&t) - ns * ns,
        "residuals": tr.residuals,
        "scale": scale,
        "ok": ok,
    });
    Ok(ctx.done(Some(input.digest), results, ok))
}

fn cmd_normal_form(ctx: &Context, path: &Path) -> Result<Outcome, Failure> {
    let input = load(path)?;
    let results = match input.doc.kind {
        DocumentKind::Tuple => normal_form_json(&detect(&input.doc.tuple()?, ctx.cli.tol)?),
        DocumentKind::ShapeOps => {
            let res = detect_shape_equality(&input.doc.shape_ops()?, ctx.cli.tol)?;
            let mut v = normal_form_json(&res.normal_form);
            v["lambdas"] = json!(res.lambdas);
            v
        }
    };
    Ok(ctx.done(Some(input.digest), results, true))
}

fn cmd_search(ctx: &Context, args: &SearchArgs) -> Result<Outcome, Failure> {
    let mut cfg = SearchConfig::new(args.n, args.m, args.symmetry.into());
    cfg.trials = args.trials;
    cfg.max_iters = args.iters;
    cfg.seed = ctx.cli.seed;
    cfg.classify_tol = cfg.classify_tol.max(ctx.cli.tol);
    let (results, records, ok) = match args.mode {
        SearchMode::Fuzz => {
            let s = fuzz_inequality(&cfg)?;
            let results = json!({
                "mode": "fuzz",
                "trials": s.trials,
                "min_defect": s.min_defect,
                "min_relative_defect": s.min_relative_defect,
                "max_ratio": s.max_ratio,
                "min_gap": s.min_gap,
                "histogram": s.histogram,
                "equality_claims": s.equality_claims,
                "violations": s.violations,
            });
            let ok = s.violations.is_empty();
            (results, s.records, ok)
        }
        SearchMode::Ascend => {
            let r = ascend_ratio(&cfg, None)?;
            let results = json!({
                "mode": "ascend",
                "trials": r.trials.len(),
                "best_ratio": r.best_ratio,
                "best_trial": r.best_trial,
                "iterations": r.iterations,
                "converged": r.converged,
                "classification": normal_form_json(&r.classified),
                "best_tuple": r.best_tuple.to_rows(),
            });
            (results, r.trials, true)
        }
    };
    if let Some(path) = &args.out {
        let text = csv_rows(&records).map_err(Failure::internal)?;
        fs::write(path, text)
            .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(Outcome {
        emit: Emit::Report {
            report: ctx.report(None, results),
            rows: Some(records),
        },
        ok,
    })
}

fn csv_rows(records: &[TrialRecord]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "seed", "ratio", "defect", "kind"])
        .map_err(|e| e.to_string())?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            json!(r.ratio).to_string(),
            json!(r.defect).to_string(),
            r.kind.as_str().to_string(),
        ])
        .map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn cmd_fmax(ctx: &Context, args: &FmaxArgs) -> Result<Outcome, Failure> {
    if args.n == 0 {
        return Err(Failure::input("need n >= 1"));
    }
    let dim = args.n * (args.n + 1) / 2;
    let (q, input_digest) = match args.q.as_str() {
        "identity" => (Matrix::identity(dim, dim), None),
        "haar" => (random_orthogonal(dim, ctx.cli.seed, true)?, None),
        path => {
            let bytes = fs::read(path)
                .map_err(|e| Failure::input(format!("cannot read {path}: {e}")))?;
            let rows: Vec<Vec<f64>> = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::input(format!("malformed Q file: {e}")))?;
            (matrix_from_rows(&rows)?, Some(digest(&bytes)))
        }
    };
    let form = CommutatorForm::new(&q, &SymBasis::for_dim(dim)?)?;
    let cfg = SimplexConfig {
        seed: ctx.cli.seed,
        ..SimplexConfig::default()
    };
    let region = SimplexRegion::new(dim, args.epsilon)?;
    let best = simplex_max(&form, &region, &cfg)?;
    let member = g_epsilon_member(&form, args.epsilon, &cfg)?;
    let results = json!({
        "dim": dim,
        "epsilon": args.epsilon,
        "value": best.value,
        "x": best.x,
        "method": best.method,
        "gradient_value": best.gradient_value,
        "oracle_value": best.oracle_value,
        "converged": best.converged,
        "barycenter_value": form.eval(&region.barycenter()),
        "member": member.member,
        "margin": member.margin,
    });
    Ok(ctx.done(input_digest, results, true))
}

fn cmd_gen(ctx: &Context, args: &GenArgs) -> Result<Outcome, Failure> {
    let g = |n, m| GroupElement::random(n, m, ctx.cli.seed);
    let doc = match args.family {
        Family::ShapeEq => {
            let mut s = equality_shape_ops(
                args.n,
                args.m,
                args.mu,
                args.lambda1,
                args.lambda2,
                args.lambda3,
            )?
            .with_c(args.c);
            if args.conjugate {
                s = s.act(&g(s.n(), s.m()))?;
            }
            TupleDocument::from_shape_ops(&s)
        }
        family => {
            let mut t = match family {
                Family::Sympair => make_symmetric_pair(args.n, args.m, args.mu)?,
                Family::Skew3 => make_skew_triple3(args.m, args.lambda)?,
                _ => make_skew_quaternionic(args.n, args.m, args.lambda)?,
            };
            if args.conjugate {
                t = act(&g(t.n(), t.m()), &t)?;
            }
            TupleDocument::from_tuple(&t)
        }
    };
    let text = doc.to_text();
    match &args.out {
        None => Ok(Outcome { emit: Emit::Raw(text), ok: true }),
        Some(path) => {
            fs::write(path, &text)
                .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))?;
            let results = json!({
                "written": path.display().to_string(),
                "digest": digest(text.as_bytes()),
                "kind": doc.kind,
                "n": doc.n,
                "m": doc.m,
            });
            Ok(ctx.done(None, results, true))
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn render(report: &ReportDocument, rows: Option<&[TrialRecord]>, format: OutputFormat) -> Result<String, Failure> {
    let value = serde_json::to_value(report).expect("report serializes");
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Text => {
            let mut pairs = Vec::new();
            for key in ["command", "input_digest", "tool_version", "seed", "tol"] {
                pairs.push((key.to_string(), scalar(&value[key])));
            }
            flatten("", &value["results"], &mut pairs);
            Ok(pairs.into_iter().map(|(k, v)| format!("{k}: {v}\n")).collect())
        }
        OutputFormat::Csv => match rows {
            Some(rows) => csv_rows(rows).map_err(Failure::internal),
            None => {
                let mut pairs = Vec::new();
                flatten("", &value, &mut pairs);
                let write = || -> Result<Vec<u8>, Box<dyn std::error::Error>> {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["key", "value"])?;
                    for (k, v) in &pairs {
                        w.write_record([k, v])?;
                    }
                    Ok(w.into_inner().map_err(|e| e.to_string())?)
                };
                let bytes = write().map_err(|e| Failure::internal(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| Failure::internal(e.to_string()))
            }
        },
    }
}

fn execute(cli: &Cli, echo: String) -> Result<(String, bool), Failure> {
    if !cli.tol.is_finite() || cli.tol < 0.0 {
        return Err(Failure::input("--tol must be finite and non-negative"));
    }
    let ctx = Context { cli, echo };
    let outcome = match &cli.command {
        Command::Check { input } => cmd_check(&ctx, input)?,
        Command::Geom { input } => cmd_geom(&ctx, input)?,
        Command::Translate { input } => cmd_translate(&ctx, input)?,
        Command::NormalForm { input } => cmd_normal_form(&ctx, input)?,
        Command::Search(args) => cmd_search(&ctx, args)?,
        Command::Fmax(args) => cmd_fmax(&ctx, args)?,
        Command::Gen(args) => cmd_gen(&ctx, args)?,
    };
    let text = match outcome.emit {
        Emit::Raw(text) => text,
        Emit::Report { report, rows } => {
            check_finite(&report.results)?;
            render(&report, rows.as_deref(), cli.output)?
        }
    };
    Ok((text, outcome.ok))
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let echo = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    match execute(&cli, echo) {
        Ok((text, ok)) => {
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return 1;
            }
            if ok {
                0
            } else {
                1
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
