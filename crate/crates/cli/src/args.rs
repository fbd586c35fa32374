use std::path::PathBuf;
use std::str::FromStr;

use bedkit::experiments::{Aggr1, Aggr2};
use bedkit::metrics::MetricId;
use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bedkit", version, about = "Behaviour-aware expression distances and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a corpus of random expressions from a grammar.
    Generate(GenerateArgs),
    /// Evaluate a constant-free expression on a Latin hypercube design.
    SynthDataset(SynthArgs),
    /// Pairwise distance matrix of a corpus.
    Distmat(DistmatArgs),
    /// Rank consistency of the behaviour-aware distance under resampling.
    Consistency(ConsistencyArgs),
    /// Error-landscape smoothness curves for several metrics.
    Smoothness(SmoothnessArgs),
    /// Replay a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    Fixed(u64),
    Random,
}

impl FromStr for Seed {
    type Err = String;

    fn from_str(s: &str) -> Result<Seed, String> {
        if s == "random" {
            return Ok(Seed::Random);
        }
        s.parse()
            .map(Seed::Fixed)
            .map_err(|_| format!("seed must be an unsigned integer or \"random\", got {s:?}"))
    }
}

impl Seed {
    pub fn resolve(self) -> u64 {
        match self {
            Seed::Fixed(s) => s,
            Seed::Random => rand::random(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 2)]
    pub max_vars: usize,
    #[arg(long, default_value_t = bedkit::expr::DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    #[arg(long, default_value = "0")]
    pub seed: Seed,
    /// Grammar file; the built-in grammar is used when absent.
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub dedup: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub truth: String,
    /// Interval of the next variable; repeat once per variable.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    pub rows: usize,
    #[arg(long, default_value = "0")]
    pub seed: Seed,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Sampling settings of the behaviour-aware distance.
#[derive(Debug, Args)]
pub struct BedArgs {
    /// `lo,hi` for every variable, or `xk:lo,hi` for one of them.
    #[arg(long, default_value = "1,5", allow_hyphen_values = true)]
    pub var_domain: Vec<String>,
    #[arg(long, default_value = "0.2,5", allow_hyphen_values = true)]
    pub const_domain: String,
    #[arg(long, default_value_t = 64)]
    pub num_var_samples: usize,
    #[arg(long, default_value_t = 16)]
    pub num_const_samples: usize,
    #[arg(long, default_value_t = bedkit::metrics::DEFAULT_PENALTY)]
    pub penalty: f64,
    /// Number of variable dimensions of the sampling box.
    #[arg(long)]
    pub dims: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub evals_per_start: usize,
}

#[derive(Debug, Args)]
pub struct DistmatArgs {
    #[arg(long)]
    pub metric: MetricId,
    #[arg(long)]
    pub exprs: PathBuf,
    /// Required by the optimal metric, rejected by the others.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub bed: BedArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value = "0")]
    pub seed: Seed,
    #[arg(long, env = "BEDKIT_WORKERS")]
    pub workers: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub exprs: PathBuf,
    /// Variable sample counts and constant sample counts, `VS,..xCS,..`.
    #[arg(long, default_value = "4,8,16,32,64x2,4,8,16")]
    pub grid: String,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 100)]
    pub shuffles: usize,
    #[command(flatten)]
    pub bed: BedArgs,
    #[arg(long, default_value = "0")]
    pub seed: Seed,
    #[arg(long, env = "BEDKIT_WORKERS")]
    pub workers: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SmoothnessArgs {
    #[arg(long)]
    pub exprs: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "edit,tree-edit,bed,optimal")]
    pub metrics: Vec<MetricId>,
    #[arg(long, default_value_t = 50)]
    pub neighbors: usize,
    /// Row aggregations; every listed one is paired with every `--aggr2`.
    #[arg(long, value_delimiter = ',', default_value = "max")]
    pub aggr1: Vec<Aggr1>,
    #[arg(long, value_delimiter = ',', default_value = "mean")]
    pub aggr2: Vec<Aggr2>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[command(flatten)]
    pub bed: BedArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value = "0")]
    pub seed: Seed,
    #[arg(long, env = "BEDKIT_WORKERS")]
    pub workers: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}
