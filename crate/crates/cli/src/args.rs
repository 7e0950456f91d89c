use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "statchar", version, about = "Sequences, torus expansions and statistical-convergence verdicts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ratios, terms and derived terms of a sequence
    Seq(SeqArgs),
    /// Canonical digits of a point and the enclosure they give
    Expand(ExpandArgs),
    /// Certified enclosure of ||u_i x|| or ||m x||
    Norm(NormArgs),
    /// Classical and statistical verdicts for a point
    Verdict(VerdictArgs),
    /// Density figures of a named index set or of exceedance sets
    Density(DensityArgs),
    /// R_m(n) checkpoints for the cardinality construction's growth hypothesis
    Hypothesis(HypothesisArgs),
    /// Bundled report for one construction
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlongArg {
    A,
    D,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Classical,
    Statistical,
    Both,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("sequence").multiple(false)))]
pub struct SeqSource {
    /// Ratio spec: inline JSON or a path to a JSON file
    #[arg(long, group = "sequence")]
    pub spec: Option<String>,
    /// Named ratio rule: zeta, equal, strict, reverse
    #[arg(long, group = "sequence")]
    pub named: Option<String>,
    /// Constant ratio b
    #[arg(long, group = "sequence")]
    pub constant: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct PointSource {
    /// Point: "p/q", inline JSON point spec, or a path to one
    #[arg(long, conflicts_with = "witness")]
    pub point: Option<String>,
    /// Named witness with its own sequence: divergent, strict, reverse, cardinality:<bits>
    #[arg(long, conflicts_with_all = ["spec", "named", "constant"])]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SeqArgs {
    #[command(flatten)]
    pub source: SeqSource,
    /// Inclusive range of n for (n, b_n, a_n), e.g. 0..10
    #[arg(long)]
    pub a_range: Option<String>,
    /// Inclusive range of derived indices, e.g. 1..7
    #[arg(long)]
    pub d_range: Option<String>,
    /// Derived index to split as (k, r)
    #[arg(long)]
    pub decompose: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[command(flatten)]
    pub point: PointSource,
    /// Number of digits
    #[arg(long, default_value_t = 20)]
    pub depth: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[command(flatten)]
    pub point: PointSource,
    /// Index i of u_i
    #[arg(long, conflicts_with = "multiplier")]
    pub index: Option<u64>,
    #[arg(long, value_enum, default_value = "d")]
    pub along: AlongArg,
    /// Explicit integer multiplier m
    #[arg(long)]
    pub multiplier: Option<String>,
    /// Enclosure width target: "p/q" or "2^-k"
    #[arg(long)]
    pub tol: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Horizon
    #[arg(long = "N", default_value_t = 1_000_000)]
    pub horizon: u64,
    /// Epsilon grid, comma separated, e.g. 1/8,1/16
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<String>,
    #[arg(long)]
    pub tol: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VerdictArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[command(flatten)]
    pub point: PointSource,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub along: AlongArg,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindArg,
    /// Density cutoff for s-convergence
    #[arg(long)]
    pub delta: Option<f64>,
    /// Emit per-index (lo, hi) enclosures as CSV instead of the summary
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[command(flatten)]
    pub point: PointSource,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Named set: levels, equal-A, strict-A, divergent-B, divergent-parent,
    /// reverse-B, reverse-lacunary, cardinality-A[:m]
    #[arg(long, conflicts_with_all = ["point", "witness"])]
    pub set: Option<String>,
    #[arg(long, value_enum, default_value = "d")]
    pub along: AlongArg,
    #[arg(long, default_value_t = 12)]
    pub checkpoints: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HypothesisArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    pub m: Vec<u64>,
    #[arg(long = "N", default_value_t = 10_000)]
    pub horizon: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// zeta, equal, strict, divergent, reverse, cardinality
    pub id: String,
    #[arg(long = "N")]
    pub horizon: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}
