//! `kgadapt` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data
//! errors. Every failure ends stderr with one JSON line
//! `{"error": "usage"|"data", "message": ...}`.

mod commands;
mod layered;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError::Usage(m.into())
    }

    pub fn data(m: impl Into<String>) -> Self {
        CliError::Data(m.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn json(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Data(m) => ("data", m),
        };
        serde_json::json!({ "error": kind, "message": msg }).to_string()
    }
}

impl From<kgadapt::Error> for CliError {
    fn from(e: kgadapt::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "kgadapt", version, about = "Knowledge-graph adapters for transformer encoders")]
#[command(propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a ConceptNet CSV dump into a binary graph cache.
    Ingest(IngestArgs),
    /// Generate a random-walk sentence corpus from a graph cache.
    Walk(WalkArgs),
    /// Keep only English lines of a free-text corpus.
    FilterOmcs(FilterArgs),
    /// Build a word-level vocabulary from a corpus.
    BuildVocab(VocabArgs),
    /// Train adapters with MLM on a corpus while the base stays frozen.
    PretrainAdapters(PretrainArgs),
    /// Fine-tune a task head over the learning-rate × epoch grid.
    Finetune(FinetuneArgs),
    /// Score a fine-tuned checkpoint on a labeled TSV file.
    Evaluate(EvaluateArgs),
    /// Render evaluation reports as consolidated tables.
    Report(ReportArgs),
    /// Count parameters of a checkpoint or a preset configuration.
    AuditParams(AuditArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "en")]
    pub lang: String,
    #[arg(long)]
    pub output: PathBuf,
    /// Relations to drop, replacing the default exclusion list.
    #[arg(long = "exclude", value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub walks: usize,
    #[arg(long, default_value_t = 30)]
    pub len: usize,
    #[arg(long, default_value_t = kgadapt::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// `relation<TAB>phrase` lines overriding the built-in templates.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = kgadapt::corpus::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Args, Debug)]
pub struct VocabArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub size: usize,
    #[arg(long = "min-freq", default_value_t = 1)]
    pub min_freq: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PretrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint supplying the frozen base; a fresh desk encoder otherwise.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// TOML or JSON file mirroring the training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "adapter-size")]
    pub adapter_size: Option<usize>,
    /// MLM steps on the whole fresh encoder before adapters are trained.
    #[arg(long = "base-steps")]
    pub base_steps: Option<u64>,
    #[arg(long = "snapshot-steps", value_delimiter = ',')]
    pub snapshot_steps: Option<Vec<u64>>,
    #[arg(long)]
    pub precision: Option<Precision>,
    /// Loss log CSV; defaults to `<out>.loss.csv`.
    #[arg(long = "loss-log")]
    pub loss_log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub task: String,
    /// Directory holding `train.tsv` and `dev.tsv`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub lrs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epochs: Option<Vec<usize>>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "freeze-base")]
    pub freeze_base: bool,
    /// Number of classes; inferred from the training labels when absent.
    #[arg(long)]
    pub labels: Option<usize>,
    #[arg(long)]
    pub precision: Option<Precision>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// JSON report path; a TSV rendering is written alongside.
    #[arg(long)]
    pub report: PathBuf,
    /// Task name, which picks the headline metric; defaults to the data file stem.
    #[arg(long)]
    pub task: Option<String>,
    /// Model label used in tables; defaults to the checkpoint file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// EvalReport JSON files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Markdown output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Adapter size for presets; 0 audits an adapter-free model.
    #[arg(long = "adapter-size")]
    pub adapter_size: Option<usize>,
    #[arg(long = "vocab-size")]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprint!("{}", e.render());
            let first = e.to_string().lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::usage(first).json());
            return ExitCode::from(1);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json());
            ExitCode::from(e.code())
        }
    }
}
