//! Command implementations behind `fmcq`. Each returns the text printed on
//! stdout.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use fmcq_core::bench::{plan_probes, render_table, run_benchmark, BenchConfig, BenchError, SamplePlan, DEFAULT_SEED};
use fmcq_core::diagnosis::{apply_diagnosis, diagnose_model, DiagnosisError, DiagnosisOptions};
use fmcq_core::io::{parse, ModelFormat, ParseError};
use fmcq_core::model::AssignmentError;
use fmcq_core::repr::ReprError;
use fmcq_core::semantics::{analyze, translate};
use fmcq_core::{Approach, Assignment, FeatureModel, Solver, SolverOptions};

#[derive(Debug, Parser)]
#[command(name = "fmcq", version, about = "Feature model configuration through conjunctive queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find configurations satisfying the requirements.
    Solve(QueryArgs),
    /// Count configurations satisfying the requirements.
    Count(QueryArgs),
    /// Suggest minimal changes to inconsistent requirements.
    Diagnose(QueryArgs),
    /// Report void model, dead and false-optional features.
    Analyze(ModelArgs),
    /// Time every approach on sampled requirements.
    Bench(BenchArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Sxfm,
    Native,
}

impl From<FormatArg> for ModelFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Sxfm => ModelFormat::Sxfm,
            FormatArg::Native => ModelFormat::Native,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprArg {
    All,
    PerFeature,
    PerConstraint,
    Csp,
}

impl From<ReprArg> for Approach {
    fn from(r: ReprArg) -> Self {
        match r {
            ReprArg::All => Approach::AllConfigs,
            ReprArg::PerFeature => Approach::PerFeature,
            ReprArg::PerConstraint => Approach::PerConstraint,
            ReprArg::Csp => Approach::Csp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutArg {
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Defaults to SXFM for `.xml`/`.sxfm` files and markup content.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "per-feature")]
    pub repr: ReprArg,
    /// Requirements, e.g. `f=1,g=0`.
    #[arg(long, default_value = "")]
    pub require: String,
    /// Maximum configurations (solve) or diagnoses (diagnose).
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// One or more models; each becomes a column of the table.
    #[arg(long, required = true, num_args = 1..)]
    pub model: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Approaches to time; all four by default.
    #[arg(long, value_enum)]
    pub repr: Vec<ReprArg>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub out: OutArg,
    #[arg(long, default_value_t = 25_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Models to load at startup.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Requirements(#[from] AssignmentError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

pub fn load_model(path: &Path, format: Option<FormatArg>) -> Result<(ModelFormat, FeatureModel), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = match format {
        Some(f) => f.into(),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("xml" | "sxfm") => ModelFormat::Sxfm,
            Some("fm") => ModelFormat::Native,
            _ => ModelFormat::detect(&text),
        },
    };
    let fm = parse(format, &text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((format, fm))
}

fn prepare(args: &QueryArgs) -> Result<(Arc<FeatureModel>, Assignment), CliError> {
    let (_, fm) = load_model(&args.model.model, args.model.format)?;
    let cr = Assignment::parse(&fm, &args.require)?;
    Ok((Arc::new(fm), cr))
}

pub fn solve(args: &QueryArgs) -> Result<String, CliError> {
    let (fm, cr) = prepare(args)?;
    let solver = Solver::build(fm.clone(), args.repr.into(), SolverOptions::default())?;
    let configs = solver.enumerate(&cr, Some(args.limit.unwrap_or(1)))?;
    let mut out = String::from(if configs.is_empty() { "UNSAT\n" } else { "SAT\n" });
    for c in &configs {
        let _ = writeln!(out, "{}", c.render(&fm));
    }
    Ok(out)
}

pub fn count(args: &QueryArgs) -> Result<String, CliError> {
    let (fm, cr) = prepare(args)?;
    let solver = Solver::build(fm, args.repr.into(), SolverOptions::default())?;
    Ok(format!("{}\n", solver.count(&cr)?))
}

pub fn diagnose(args: &QueryArgs) -> Result<String, CliError> {
    let (fm, cr) = prepare(args)?;
    let cf = translate(&fm);
    let report = diagnose_model(&fm, &cf, &cr, args.limit.unwrap_or(10), DiagnosisOptions::default())?;
    if report.diagnoses.first().is_some_and(|d| d.is_empty()) {
        return Ok("consistent\n".to_string());
    }
    let mut out = String::new();
    if !report.complete {
        let _ = writeln!(out, "# scanned {} configurations; diagnoses are minimal within the scan", report.scanned);
    }
    for (i, d) in report.diagnoses.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}: drop {} -> {}",
            i + 1,
            d.delta.render(&fm),
            apply_diagnosis(&cr, d).render(&fm)
        );
    }
    Ok(out)
}

pub fn analyze_model(args: &ModelArgs) -> Result<String, CliError> {
    let (_, fm) = load_model(&args.model, args.format)?;
    let a = analyze(&fm, &translate(&fm));
    let ids = |s: &std::collections::BTreeSet<usize>| s.iter().map(|&f| fm.id(f)).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    let _ = writeln!(out, "features: {}", fm.len());
    let _ = writeln!(out, "void: {}", a.void);
    let _ = writeln!(out, "dead: {}", ids(&a.dead));
    let _ = writeln!(out, "false-optional: {}", ids(&a.false_optional));
    let _ = writeln!(
        out,
        "configurations: {}",
        a.configuration_count.map_or("-".to_string(), |c| c.to_string())
    );
    Ok(out)
}

pub fn bench(args: &BenchArgs) -> Result<String, CliError> {
    let approaches: Vec<Approach> = if args.repr.is_empty() {
        Approach::ALL.to_vec()
    } else {
        args.repr.iter().map(|&r| r.into()).collect()
    };
    let plan = SamplePlan {
        seed: args.seed,
        sample_count: args.samples,
        ..SamplePlan::default()
    };
    let cfg = BenchConfig {
        warmup: args.warmup,
        reps: args.reps,
        ..BenchConfig::default()
    };
    let mut reports = Vec::new();
    for path in &args.model {
        let (_, fm) = load_model(path, args.format)?;
        let fm = Arc::new(fm);
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("model")
            .to_string();
        let probes = plan_probes(&fm, &plan)?;
        reports.push(run_benchmark(&name, &fm, &probes, &approaches, &cfg)?);
    }
    Ok(match args.out {
        OutArg::Table => render_table(&reports),
        OutArg::Csv => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                let csv = r.to_csv();
                out.push_str(if i == 0 { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
            }
            out
        }
    })
}
