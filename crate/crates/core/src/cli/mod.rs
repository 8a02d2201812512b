//! The `hetnr` command line.
//!
//! Settings come from built-in defaults, then the `run.json` passed with
//! `-c`, then flags; later sources win. Every command writes sorted-key JSON
//! plus a `manifest.json` recording the config, seeds and input/output
//! hashes under `--out` (default `runs`):
//!
//! ```text
//! search/   architecture.json  architecture_seed{s}.json  trace_seed{s}.json  frequency.json
//! retrain/  seed{s}/ (checkpoint)  history_seed{s}.json  results.json
//! eval/     searched.json  all_nodes.json  [search_cv.json]  report.md
//! oracle/   ranking.json
//! report/   report.json  report.md
//! ```
//!
//! `generate` writes the dataset to `--out` or, if absent, `data.dir`.
//! Exit status is 0 on success, 2 when an input file is missing and 1 for any
//! other error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{compare_to_oracle, load_dataset, Context, Dataset, OracleComparison, Report, ReportRow};
pub use config::{parse_seeds, DataSection, EvalSection, ModelSection, RunConfig, SearchSection, TrainSection};
pub use manifest::{sha256_file, ArtifactWriter, RunManifest};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::search::Strategy;

#[derive(Debug, Parser)]
#[command(name = "hetnr", version, about = "Per-hop node-type search for heterogeneous graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a planted synthetic dataset.
    Generate,
    /// Search an architecture for every seed.
    Search,
    /// Retrain an architecture on one fold for every seed.
    Retrain,
    /// Cross-validate the searched architecture and the all-nodes baseline.
    Eval,
    /// Train and rank every architecture of the search space.
    Oracle,
    /// Merge eval, search and oracle outputs into one table.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Unrolled,
    FirstOrder,
    Sampled,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Unrolled => Strategy::Unrolled,
            StrategyArg::FirstOrder => Strategy::FirstOrder,
            StrategyArg::Sampled => Strategy::Sampled,
        }
    }
}

/// Parsed value of `--seeds`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(s: &str) -> std::result::Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

#[derive(Debug, clap::Args)]
pub struct Opts {
    /// run.json configuration file.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed (for `generate`, the dataset seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Seeds for multi-seed commands: `0..9` (inclusive) or `1,2,5`.
    #[arg(long, global = true, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    /// Worker threads for independent runs; 1 runs everything sequentially.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Fraction of each training split that is kept.
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Architecture file for `retrain`, `eval` and `report`.
    #[arg(long, global = true)]
    pub architecture: Option<PathBuf>,
    /// Leave timestamps out of manifests so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamps: bool,
}

/// Applies flags on top of the loaded (or default) config.
pub fn resolve(command: &Command, opts: &Opts) -> Result<Context> {
    let mut config = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let (Some(s), false) = (opts.seed, matches!(command, Command::Generate)) {
        config.seed = s;
    }
    if let Some(seeds) = &opts.seeds {
        config.eval.seeds = Some(seeds.0.clone());
    }
    if let Some(s) = opts.strategy {
        config.search.strategy = s.into();
    }
    if let Some(f) = opts.train_fraction {
        config.eval.train_fraction = f;
    }
    if let Some(d) = &opts.data {
        config.data.dir = d.clone();
    }
    if opts.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let exec = if opts.jobs > 1 { Exec::Parallel } else { Exec::Sequential };
    Ok(Context {
        seeds: config.seeds(),
        config,
        out: opts.out.clone().unwrap_or_else(|| PathBuf::from("runs")),
        exec,
        timestamps: !opts.no_timestamps,
        architecture: opts.architecture.clone(),
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = resolve(&cli.command, &cli.opts)?;
    if cli.opts.jobs > 1 {
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.opts.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate => {
            let dir = cli.opts.out.clone().unwrap_or_else(|| ctx.config.data.dir.clone());
            commands::generate(&ctx, cli.opts.seed, &dir)
        }
        Command::Search => commands::run_search(&ctx),
        Command::Retrain => commands::run_retrain(&ctx),
        Command::Eval => commands::run_eval(&ctx),
        Command::Oracle => commands::run_oracle(&ctx),
        Command::Report => commands::run_report(&ctx),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingFile(_) => 2,
        _ => 1,
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
