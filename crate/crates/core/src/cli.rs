//! The `atk` command line: build, train, generate, eval and compare.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error, 3 empty data.
//! Settings resolve as command-line flag, then `--config` TOML file, then
//! built-in default.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{ConstraintSet, PlaceholderMode, PlaceholderScheme};
use crate::corpus::{
    build_dataset, read_jsonl, read_jsonl_values, write_jsonl_values, ConstraintSource, CorpusError, ExampleRecord, Gazetteer,
    SamplingConfig, Stopwords,
};
use crate::decode::{generate, BeamConfig, Diagnostics, System};
use crate::lm::{LmError, ModelConfig, ModelSet};
use crate::metrics::{evaluate, render_table, EvalInput, EvalReport, MetricError};
use crate::tokenize::{join, tokenize};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Empty(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::NotEnoughEligible { .. } => CliError::Empty(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::EmptyCorpus => CliError::Empty(e.to_string()),
            MetricError::LengthMismatch { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<LmError> for CliError {
    fn from(e: LmError) -> Self {
        match e {
            LmError::EmptyCorpus => CliError::Empty(e.to_string()),
            LmError::InvalidConfig(_) | LmError::Format(_) | LmError::Io(_) => CliError::Input(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "atk", version, about = "Lexically constrained generation with templates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn raw records into training examples.
    Build(BuildArgs),
    /// Fit a model file on built examples.
    Train(TrainArgs),
    /// Generate outputs for records with constraints.
    Generate(GenerateArgs),
    /// Score generated outputs against references.
    Eval(EvalArgs),
    /// Run every system on one test set and score them.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildMode {
    /// Sample keywords from each target.
    Keywords,
    /// Tag gazetteer entities in each target.
    Entities,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with default settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<BuildMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use one shared placeholder for every slot.
    #[arg(long)]
    pub single_mask: bool,
    #[arg(long)]
    pub min_k: Option<usize>,
    #[arg(long)]
    pub max_k: Option<usize>,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Gazetteer, one entity per line.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// Where to write dataset statistics; printed to stdout when absent.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Built examples.
    #[arg(long)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub copy_weight: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub beam_size: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub length_penalty: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Records with `constraints` and an optional `source`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub system: Option<System>,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output of `generate`.
    #[arg(long)]
    pub input: PathBuf,
    /// Records with `id` and `target`, in the same order.
    #[arg(long)]
    pub references: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also print a plain-text table.
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test records with `target`, `constraints` and an optional `source`.
    #[arg(long)]
    pub input: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[command(flatten)]
    pub common: Common,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub mode: Option<BuildMode>,
    pub seed: Option<u64>,
    pub single_mask: Option<bool>,
    pub min_k: Option<usize>,
    pub max_k: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub order: Option<usize>,
    pub copy_weight: Option<f64>,
    pub alpha: Option<f64>,
    pub system: Option<String>,
    pub beam_size: Option<usize>,
    pub max_len: Option<usize>,
    pub length_penalty: Option<f64>,
    pub workers: Option<usize>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn beam(&self, args: &DecodeArgs) -> Result<BeamConfig> {
        let d = BeamConfig::default();
        let config = BeamConfig {
            beam_size: args.beam_size.or(self.beam_size).unwrap_or(d.beam_size),
            max_len: args.max_len.or(self.max_len).unwrap_or(d.max_len),
            length_penalty: args.length_penalty.or(self.length_penalty).unwrap_or(d.length_penalty),
        };
        config.validate().map_err(CliError::Input)?;
        Ok(config)
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("ATK_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    let common = match &command {
        Command::Build(a) => &a.common,
        Command::Train(a) => &a.common,
        Command::Generate(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Compare(a) => &a.common,
    };
    let file = FileConfig::load(common.config.as_deref())?;
    let workers = common.workers.or(file.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Build(a) => cmd_build(&a, &file),
        Command::Train(a) => cmd_train(&a, &file),
        Command::Generate(a) => cmd_generate(&a, &file),
        Command::Eval(a) => cmd_eval(&a),
        Command::Compare(a) => cmd_compare(&a, &file),
    })
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_output(p, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Internal(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write_records<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_jsonl_values(path, items).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn cmd_build(args: &BuildArgs, file: &FileConfig) -> Result<()> {
    let records = read_jsonl(&args.input)?;
    if records.is_empty() {
        return Err(CliError::Empty(format!("{} has no records", args.input.display())));
    }
    let single_mask = args.single_mask || file.single_mask.unwrap_or(false);
    let scheme = if single_mask { PlaceholderScheme::SINGLE_MASK } else { PlaceholderScheme::UNIQUE };
    let source = match args.mode.or(file.mode).unwrap_or(BuildMode::Keywords) {
        BuildMode::Keywords => {
            let d = SamplingConfig::default();
            let config = SamplingConfig {
                min_k: args.min_k.or(file.min_k).unwrap_or(d.min_k),
                max_k: args.max_k.or(file.max_k).unwrap_or(d.max_k),
                seed: args.seed.or(file.seed).unwrap_or(d.seed),
            };
            config.validate().map_err(|e| CliError::Input(e.to_string()))?;
            let stopwords = match args.stopwords.as_ref().or(file.stopwords.as_ref()) {
                Some(p) => Stopwords::load(p)?,
                None => Stopwords::bundled(),
            };
            ConstraintSource::Keywords { config, stopwords }
        }
        BuildMode::Entities => ConstraintSource::Entities(match args.gazetteer.as_ref().or(file.gazetteer.as_ref()) {
            Some(p) => Gazetteer::load(p)?,
            None => Gazetteer::bundled(),
        }),
    };

    let dataset = build_dataset(&records, &source, scheme)?;
    if dataset.examples.is_empty() {
        return Err(CliError::Empty("no record produced an example".into()));
    }
    let out: Vec<ExampleRecord> =
        dataset.examples.iter().zip(&dataset.record_ids).map(|(pair, &id)| ExampleRecord::from_pair(id as u64, pair)).collect();
    write_records(&args.output, &out)?;
    info!("built {} examples, skipped {}", dataset.stats.example_count, dataset.stats.skipped);
    emit(args.stats.as_deref(), &to_json(&dataset.stats)?)
}

pub fn cmd_train(args: &TrainArgs, file: &FileConfig) -> Result<()> {
    let records: Vec<ExampleRecord> = read_jsonl_values(&args.input)?;
    let pairs = records
        .iter()
        .map(|r| r.to_pair().map_err(|e| CliError::Input(format!("example {}: {e}", r.id))))
        .collect::<Result<Vec<_>>>()?;
    let d = ModelConfig::default();
    let config = ModelConfig {
        order: args.order.or(file.order).unwrap_or(d.order),
        copy_weight: args.copy_weight.or(file.copy_weight).unwrap_or(d.copy_weight),
        alpha: args.alpha.or(file.alpha).unwrap_or(d.alpha),
        ngram_weights: None,
    };
    let models = ModelSet::fit(&pairs, &config)?;
    info!("fitted on {} examples", pairs.len());
    models.save(&args.model).map_err(|e| CliError::Internal(e.to_string()))
}

/// One generation request.
#[derive(Debug, Clone, Deserialize)]
pub struct GenerateRecord {
    pub id: Option<u64>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub target: Option<String>,
    pub constraints: Vec<String>,
}

/// One line of `generate` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub id: u64,
    pub system: System,
    pub scheme: PlaceholderMode,
    pub output: String,
    pub constraints: Vec<String>,
    pub diagnostics: Diagnostics,
}

struct Request {
    id: u64,
    source: Vec<String>,
    target: Option<Vec<String>>,
    constraints: ConstraintSet,
}

fn read_requests(path: &Path) -> Result<Vec<Request>> {
    let records: Vec<GenerateRecord> = read_jsonl_values(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let constraints =
                ConstraintSet::parse(&r.constraints).map_err(|e| CliError::Input(format!("record {}: {e}", i + 1)))?;
            Ok(Request {
                id: r.id.unwrap_or(i as u64),
                source: r.source.as_deref().map(tokenize).unwrap_or_default(),
                target: r.target.as_deref().map(tokenize),
                constraints,
            })
        })
        .collect()
}

fn load_model(path: &Path) -> Result<ModelSet> {
    ModelSet::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn run_system(models: &ModelSet, system: System, requests: &[Request], beam: &BeamConfig) -> Vec<OutputRecord> {
    requests
        .par_iter()
        .map(|r| {
            let g = generate(models, system, &r.source, &r.constraints, beam);
            OutputRecord {
                id: r.id,
                system,
                scheme: models.scheme.mode,
                output: join(&g.tokens),
                constraints: r.constraints.to_strings(),
                diagnostics: g.diagnostics,
            }
        })
        .collect()
}

pub fn cmd_generate(args: &GenerateArgs, file: &FileConfig) -> Result<()> {
    let system = match (args.system, &file.system) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse().map_err(CliError::Input)?,
        (None, None) => System::AutoTemplate,
    };
    let beam = file.beam(&args.decode)?;
    let models = load_model(&args.model)?;
    let requests = read_requests(&args.input)?;
    let outputs = run_system(&models, system, &requests, &beam);
    write_records(&args.output, &outputs)
}

/// A reference line: any record with an `id` and a `target`.
#[derive(Debug, Clone, Deserialize)]
struct ReferenceRecord {
    id: Option<u64>,
    target: String,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let outputs: Vec<OutputRecord> = read_jsonl_values(&args.input)?;
    let references: Vec<ReferenceRecord> = read_jsonl_values(&args.references)?;
    if outputs.len() != references.len() {
        return Err(CliError::Input(format!("{} outputs but {} references", outputs.len(), references.len())));
    }
    let Some(first) = outputs.first() else {
        return Err(CliError::Empty("nothing to evaluate".into()));
    };
    for (i, (o, r)) in outputs.iter().zip(&references).enumerate() {
        let ref_id = r.id.unwrap_or(i as u64);
        if o.id != ref_id {
            return Err(CliError::Input(format!("line {}: output id {} does not match reference id {ref_id}", i + 1, o.id)));
        }
        if o.system != first.system || o.scheme != first.scheme {
            return Err(CliError::Input(format!("line {}: outputs mix systems or schemes", i + 1)));
        }
    }
    let hypotheses: Vec<Vec<String>> = outputs.iter().map(|o| tokenize(&o.output)).collect();
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(&r.target)).collect();
    let constraints = outputs
        .iter()
        .map(|o| ConstraintSet::parse(&o.constraints).map_err(|e| CliError::Input(format!("output {}: {e}", o.id))))
        .collect::<Result<Vec<_>>>()?;
    let report = evaluate(&EvalInput {
        system: first.system.as_str(),
        scheme: first.scheme,
        hypotheses: &hypotheses,
        references: &refs,
        constraints: &constraints,
        repaired: outputs.iter().filter(|o| o.diagnostics.repaired).count(),
    })?;
    emit(args.output.as_deref(), &to_json(&report)?)?;
    if args.table {
        eprint!("{}", render_table(std::slice::from_ref(&report)));
    }
    Ok(())
}

/// Output of `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub scheme: PlaceholderMode,
    pub count: usize,
    pub beam: BeamConfig,
    pub systems: Vec<EvalReport>,
}

pub fn compare(
    models: &ModelSet,
    requests: &[(Vec<String>, Vec<String>, ConstraintSet)],
    beam: &BeamConfig,
) -> Result<CompareReport> {
    let reqs: Vec<Request> = requests
        .iter()
        .enumerate()
        .map(|(i, (source, target, constraints))| Request {
            id: i as u64,
            source: source.clone(),
            target: Some(target.clone()),
            constraints: constraints.clone(),
        })
        .collect();
    compare_requests(models, &reqs, beam)
}

fn compare_requests(models: &ModelSet, requests: &[Request], beam: &BeamConfig) -> Result<CompareReport> {
    let references = requests
        .iter()
        .map(|r| r.target.clone().ok_or_else(|| CliError::Input(format!("record {} has no target", r.id))))
        .collect::<Result<Vec<_>>>()?;
    let constraints: Vec<ConstraintSet> = requests.iter().map(|r| r.constraints.clone()).collect();
    let systems = System::ALL
        .iter()
        .map(|&system| {
            let outputs = run_system(models, system, requests, beam);
            let hypotheses: Vec<Vec<String>> = outputs.iter().map(|o| tokenize(&o.output)).collect();
            Ok(evaluate(&EvalInput {
                system: system.as_str(),
                scheme: models.scheme.mode,
                hypotheses: &hypotheses,
                references: &references,
                constraints: &constraints,
                repaired: outputs.iter().filter(|o| o.diagnostics.repaired).count(),
            })?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareReport { scheme: models.scheme.mode, count: requests.len(), beam: *beam, systems })
}

pub fn cmd_compare(args: &CompareArgs, file: &FileConfig) -> Result<()> {
    let beam = file.beam(&args.decode)?;
    let models = load_model(&args.model)?;
    let requests = read_requests(&args.input)?;
    if requests.is_empty() {
        return Err(CliError::Empty(format!("{} has no records", args.input.display())));
    }
    let report = compare_requests(&models, &requests, &beam)?;
    emit(args.output.as_deref(), &to_json(&report)?)?;
    if args.table {
        eprint!("{}", render_table(&report.systems));
    }
    Ok(())
}
