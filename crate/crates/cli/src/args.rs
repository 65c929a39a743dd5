use std::path::PathBuf;

use bctree::experiments::{Axis, ScorePair};
use bctree::scoring::ScoreRuleId;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "bctree", version, about = "Parameterized branch-and-cut experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Base seed for instance generation and probing.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving artifacts and manifest.json.
    #[arg(long, global = true, default_value = "bctree-out")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Also write SVG plots where the subcommand has one.
    #[arg(long, global = true)]
    pub svg: bool,
    /// JSON object of flag values, applied before the command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Validate flags and print the resolved settings without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate Chvátal-style multiple-knapsack instances.
    Generate(GenerateArgs),
    /// Solve one instance and print the outcome as JSON.
    Solve(SolveArgs),
    /// Mean tree size over a grid of cut weights.
    Sweep(SweepArgs),
    /// Split a parameter axis into pieces with a constant search tree.
    VerifyPieces(PiecesArgs),
    /// Check that the tree is a rooted subtree of the suppressed tree.
    VerifySubtree(SubtreeArgs),
    /// Evaluate the piece-count and pseudo-dimension formulas.
    Bounds(BoundsArgs),
    /// Train/test gap of the empirical tree-size minimizer.
    Gap(GapArgs),
    /// Tree sizes on the odd-sum instance with both branching styles.
    Jeroslow(JeroslowArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::VerifyPieces(_) => "verify-pieces",
            Command::VerifySubtree(_) => "verify-subtree",
            Command::Bounds(_) => "bounds",
            Command::Gap(_) => "gap",
            Command::Jeroslow(_) => "jeroslow",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, default_value_t = 10)]
    pub items: usize,
    #[arg(long, default_value_t = 2)]
    pub knapsacks: usize,
    /// Reverse-Chvátal values (largest weight gets the smallest value).
    #[arg(long)]
    pub reverse: bool,
    #[arg(long, default_value_t = 50.0)]
    pub weight_mean: f64,
    #[arg(long, default_value_t = 2.0)]
    pub weight_sd: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Number of instances, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Instance file.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub mu_branch: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu_cut: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// single, multi or disj.
    #[arg(long, default_value = "single")]
    pub branch_mode: String,
    #[arg(long, default_value_t = 2)]
    pub cuts_per_node: usize,
    /// The two branching rules combined by --mu-branch.
    #[arg(long, value_delimiter = ',', default_value = "mostfrac,sblinear:0.5")]
    pub branch_rules: Vec<ScoreRuleId>,
    /// Cut score pair combined by --mu-cut.
    #[arg(long, default_value = "ep")]
    pub pair: ScorePair,
    /// Depth limit; defaults to four times the number of variables.
    #[arg(long)]
    pub depth_limit: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub node_cap: usize,
    /// Skip cover cuts even when the instance is a multiple knapsack.
    #[arg(long)]
    pub no_cuts: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Also write the tree as JSON lines.
    #[arg(long)]
    pub dump_tree: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value = "ep")]
    pub pair: ScorePair,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu_branch: f64,
    #[arg(long, value_delimiter = ',', default_value = "mostfrac,mostfrac")]
    pub branch_rules: Vec<ScoreRuleId>,
    #[arg(long, default_value_t = 2)]
    pub cuts_per_node: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub node_cap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PiecesArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// mu-branch, mu-cut or lambda; with --two-d, the weight scanned against lambda.
    #[arg(long, default_value = "mu-cut")]
    pub axis: Axis,
    /// Scan rectangles of (axis, lambda).
    #[arg(long)]
    pub two_d: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub coarse_step: f64,
    /// Random interior probes per piece.
    #[arg(long, default_value_t = 10)]
    pub probes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SubtreeArgs {
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub delta: u32,
    #[arg(long)]
    pub k: u64,
    #[arg(long)]
    pub b: u64,
    #[arg(long, default_value_t = 2)]
    pub d: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct GapArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400,800")]
    pub train_sizes: Vec<usize>,
    #[arg(long, default_value_t = 8000)]
    pub test_size: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 100_000)]
    pub node_cap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct JeroslowArgs {
    /// Odd number of variables.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
}
