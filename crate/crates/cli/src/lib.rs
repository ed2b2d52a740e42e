//! The `panacea` operator command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 runtime error. A one-line summary is always printed; `--report <path>`
//! also writes it as JSON together with command-specific details.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use panacea_core::corpus::DEFAULT_MIN_TREE_SIZE;
use serde_json::{json, Value};

pub use commands::execute;

#[derive(Debug, Parser)]
#[command(name = "panacea", version, about = "Claim fact-checking and rumour detection")]
pub struct Cli {
    /// Config file (TOML). Without one, defaults apply.
    #[arg(long, global = true, env = "PANACEA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides `data_dir` from the config.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Write a JSON report of the outcome to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add documents, claims or propagation trees to the store.
    Ingest {
        kind: IngestKind,
        path: PathBuf,
        /// Trees with fewer nodes are rejected.
        #[arg(long, default_value_t = DEFAULT_MIN_TREE_SIZE)]
        min_size: usize,
    },
    /// Build or inspect the paragraph and tree indexes.
    Index {
        action: IndexAction,
    },
    /// BM25 search over stored paragraphs.
    Search {
        query: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Train the veracity (nlisan) or rumour (bigcn) model.
    Train(TrainArgs),
    /// Evaluate retrieval or rumour detection.
    Eval {
        #[command(subcommand)]
        task: EvalTask,
    },
    /// Store fact-check and rumour results for every stored claim.
    Precompute,
    /// Run the HTTP service until interrupted.
    Serve {
        /// Overrides `bind` from the config.
        #[arg(long)]
        bind: Option<String>,
        /// Overrides `slots` from the config.
        #[arg(long)]
        slots: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestKind {
    Docs,
    Claims,
    Trees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndexAction {
    Build,
    Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Nlisan,
    Bigcn,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    pub model: ModelKind,
    /// Labelled claims (nlisan) or trees (bigcn). Defaults to the store.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Start from this checkpoint instead of fresh weights.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Check analytic gradients on the first example before training.
    #[arg(long)]
    pub gradcheck: bool,
}

#[derive(Debug, Subcommand)]
pub enum EvalTask {
    /// Mean AP@{5,10,20,100} over judged queries for BM25 and BM25+rerank.
    #[command(alias = "ap")]
    Retrieval {
        /// One JSON object per line: {"query": ..., "relevant": [unit ids]}.
        #[arg(long)]
        queries: PathBuf,
    },
    /// Accuracy and per-class precision/recall on labelled tree sets.
    Rumour {
        /// BiGCN checkpoint. Defaults to the configured model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Name of the set the model was trained on.
        #[arg(long, default_value = "train")]
        train_set: String,
        /// Labelled trees as `name=path` or `path`. Repeatable.
        #[arg(long = "test", required = true)]
        tests: Vec<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Index { .. } => "index",
            Command::Search { .. } => "search",
            Command::Train(_) => "train",
            Command::Eval { .. } => "eval",
            Command::Precompute => "precompute",
            Command::Serve { .. } => "serve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub details: Value,
}

impl Outcome {
    pub fn new(summary: impl Into<String>, details: Value) -> Self {
        Outcome { summary: summary.into(), details }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl ToString) -> Self {
        CliError { code: 1, message: message.to_string() }
    }

    pub fn data(message: impl ToString) -> Self {
        CliError { code: 2, message: message.to_string() }
    }

    pub fn runtime(message: impl ToString) -> Self {
        CliError { code: 3, message: message.to_string() }
    }
}

/// Runs a parsed command, prints its summary, writes the report and returns
/// the exit code.
pub fn run(cli: Cli) -> i32 {
    let command = cli.command.name();
    let (code, summary, details) = match execute(&cli) {
        Ok(out) => (0, out.summary, out.details),
        Err(e) => (e.code, format!("error: {}", e.message), Value::Null),
    };
    println!("{summary}");
    if let Some(path) = &cli.report {
        let report = json!({ "command": command, "exit_code": code, "summary": summary, "details": details });
        let text = serde_json::to_string_pretty(&report).expect("report serialises");
        if let Err(e) = std::fs::write(path, text) {
            println!("error: cannot write report {}: {e}", path.display());
            return 3;
        }
    }
    code
}
