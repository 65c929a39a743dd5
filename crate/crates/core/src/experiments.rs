//! Experiment protocols: mu sweeps over knapsack families, piece detection
//! along parameter axes, rooted-subtree replay, bound calculators,
//! generalization-gap estimates and the Jeroslow separation.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnc::{self, BncConfig, BncData, BncHooks, BranchMode, CutPlane, RunStatus};
use crate::error::{Error, Result};
use crate::ip::{jeroslow_instance, IpInstance};
use crate::knapsack::{extended_cover_cuts, generate, KnapsackSpec};
use crate::scoring::ScoreRuleId;
use crate::tree::{canonical_hash, rooted_path_in, run, run_suppressed, Limits, ScoreParams};

/// Pair of cut scores combined by the cut weight.
/// Big integers as decimal strings in JSON.
mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorePair {
    Ep,
    Ed,
    Dp,
}

impl ScorePair {
    pub const ALL: [ScorePair; 3] = [ScorePair::Ep, ScorePair::Ed, ScorePair::Dp];

    pub fn rules(self) -> (ScoreRuleId, ScoreRuleId) {
        use ScoreRuleId::*;
        match self {
            ScorePair::Ep => (Efficacy, Parallelism),
            ScorePair::Ed => (Efficacy, DirectedCutoff),
            ScorePair::Dp => (DirectedCutoff, Parallelism),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScorePair::Ep => "ep",
            ScorePair::Ed => "ed",
            ScorePair::Dp => "dp",
        }
    }
}

impl FromStr for ScorePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ep" => Ok(ScorePair::Ep),
            "ed" => Ok(ScorePair::Ed),
            "dp" => Ok(ScorePair::Dp),
            other => Err(Error::InvalidInput(format!("unknown score pair `{other}`"))),
        }
    }
}

/// Grid `0, step, ..., 1`. The step must divide 1.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("grid step {step} does not divide 1")));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Depth limit used when none is configured.
pub fn default_depth_limit(num_vars: usize) -> usize {
    4 * num_vars
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Instance family; sample `s` uses seed `spec.seed + s`.
    pub spec: KnapsackSpec,
    pub pair: ScorePair,
    pub grid_step: f64,
    pub samples: usize,
    pub lambda: f64,
    pub mu_branch: f64,
    pub branch_rules: (ScoreRuleId, ScoreRuleId),
    pub cuts_per_node: usize,
    pub depth_limit: Option<usize>,
    pub node_cap: usize,
}

impl SweepConfig {
    pub fn new(spec: KnapsackSpec, pair: ScorePair) -> Self {
        SweepConfig {
            spec,
            pair,
            grid_step: 0.01,
            samples: 100,
            lambda: 1.0,
            mu_branch: 1.0,
            branch_rules: (ScoreRuleId::MostFractional, ScoreRuleId::MostFractional),
            cuts_per_node: 2,
            depth_limit: None,
            node_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub mean: f64,
    pub sd: f64,
    pub min: usize,
    pub max: usize,
    /// Runs that entered the statistics.
    pub n: usize,
    /// Runs dropped because the node cap was hit.
    pub truncated: usize,
}

struct Sample {
    ip: IpInstance,
    pool: Vec<CutPlane>,
}

fn knapsack_samples(spec: &KnapsackSpec, count: usize, first_seed: u64) -> Result<Vec<Sample>> {
    (0..count as u64)
        .into_par_iter()
        .map(|s| {
            let inst = generate(&spec.with_seed(first_seed.wrapping_add(s)))?;
            let pool = extended_cover_cuts(&inst.structure);
            Ok(Sample { ip: inst.ip, pool })
        })
        .collect()
}

fn mean_sd(values: &[usize]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Tree size against the cut weight on a paired set of instances.
pub fn sweep_mu(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let grid = unit_grid(cfg.grid_step)?;
    let samples = knapsack_samples(&cfg.spec, cfg.samples, cfg.spec.seed)?;
    let config = BncConfig { cuts_per_node: cfg.cuts_per_node, ..BncConfig::default() };
    let limits = Limits { node_cap: cfg.node_cap, ..Limits::default() };
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..samples.len()).map(move |s| (g, s))).collect();
    let sizes: Vec<(usize, RunStatus)> = jobs
        .par_iter()
        .map(|&(g, s)| {
            let sample = &samples[s];
            let depth = cfg.depth_limit.unwrap_or_else(|| default_depth_limit(sample.ip.num_vars));
            let params = bnc::params(cfg.mu_branch, grid[g], cfg.lambda, cfg.branch_rules, cfg.pair.rules(), depth);
            let out = bnc::solve(&sample.ip, sample.pool.clone(), config.clone(), &params, &limits)?;
            Ok((out.tree_size, out.status))
        })
        .collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &mu)| {
            let runs = &sizes[g * samples.len()..(g + 1) * samples.len()];
            let kept: Vec<usize> =
                runs.iter().filter(|(_, st)| *st != RunStatus::Truncated).map(|(size, _)| *size).collect();
            let (mean, sd) = mean_sd(&kept);
            SweepRow {
                mu,
                mean,
                sd,
                min: kept.iter().copied().min().unwrap_or(0),
                max: kept.iter().copied().max().unwrap_or(0),
                n: kept.len(),
                truncated: runs.len() - kept.len(),
            }
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("mu,mean,sd,min,max,n\n");
    for r in rows {
        let _ = writeln!(s, "{:.4},{:.6},{:.6},{},{},{}", r.mu, r.mean, r.sd, r.min, r.max, r.n);
    }
    s
}

/// Grid value minimizing the mean tree size; the first one on ties.
pub fn argmin_mu(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.mean.is_finite())
        .fold(None, |best: Option<&SweepRow>, r| match best {
            Some(b) if b.mean <= r.mean => Some(b),
            _ => Some(r),
        })
        .map(|r| r.mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    MuBranch,
    MuCut,
    Lambda,
}

impl Axis {
    pub fn apply(self, base: &ScoreParams, value: f64) -> ScoreParams {
        let mut p = base.clone();
        match self {
            Axis::MuBranch => p.mu[bnc::BRANCH] = value,
            Axis::MuCut => p.mu[bnc::CUT] = value,
            Axis::Lambda => p.lambda = value,
        }
        p
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu_branch" | "mu-branch" => Ok(Axis::MuBranch),
            "mu_cut" | "mu-cut" => Ok(Axis::MuCut),
            "lambda" => Ok(Axis::Lambda),
            other => Err(Error::InvalidInput(format!("unknown axis `{other}`"))),
        }
    }
}

/// Everything fixed during a parameter scan except the scanned value.
#[derive(Debug, Clone)]
pub struct ScanProblem {
    pub ip: IpInstance,
    pub pool: Vec<CutPlane>,
    pub config: BncConfig,
    pub params: ScoreParams,
    pub limits: Limits,
}

impl ScanProblem {
    fn hooks(&self) -> Result<BncHooks> {
        BncHooks::new(self.ip.clone(), self.pool.clone(), self.config.clone())
    }

    /// Digest of the full search tree, `None` when the node cap was hit.
    pub fn digest(&self, params: &ScoreParams) -> Result<Option<String>> {
        let tree = run(BncData::new(self.ip.clone())?, &self.hooks()?, params, &self.limits)?;
        Ok((!tree.truncated).then(|| canonical_hash(&tree)))
    }

    /// Digest of the tree built with fathoming suppressed.
    pub fn suppressed_digest(&self, params: &ScoreParams) -> Result<Option<String>> {
        let tree = run_suppressed(BncData::new(self.ip.clone())?, &self.hooks()?, params, &self.limits)?;
        Ok((!tree.truncated).then(|| canonical_hash(&tree)))
    }

    /// A priori cap on the size of any action set: branching candidates
    /// and batches of pool cuts.
    pub fn action_cap(&self) -> u64 {
        let n = self.ip.num_vars as u64;
        let branch = match &self.config.branch_mode {
            BranchMode::SingleVariable => n,
            BranchMode::MultiVariable(s) => s.len() as u64,
            BranchMode::GeneralDisjunction { list, .. } => list.len() as u64,
        };
        let m = self.pool.len() as u64;
        let c = (self.config.cuts_per_node as u64).min(m);
        // largest binomial C(m, j) over j <= c
        let cuts = (0..=c).map(|j| binomial(m, j)).max().unwrap_or(1);
        branch.max(cuts).max(1)
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Closed interval `[lo, hi]`; the next piece starts at the double after `hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub axis: Axis,
    pub pieces: Vec<Piece>,
    pub consistent: bool,
    /// Probes evaluated inside each piece.
    pub probes_per_piece: usize,
    pub mismatched_probes: Vec<f64>,
    #[serde(with = "decimal")]
    pub theoretical_cap: BigUint,
}

impl PieceReport {
    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn within_cap(&self) -> bool {
        BigUint::from(self.pieces.len()) <= self.theoretical_cap
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("lo,hi,digest\n");
        for p in &self.pieces {
            let _ = writeln!(s, "{},{},{}", p.lo, p.hi, p.digest);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub coarse_step: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings { coarse_step: 1e-3, probes: 10, seed: 0 }
    }
}

/// Splits `[0, 1]` into maximal closed intervals on which `digest_at` is
/// constant. Digests are compared on a coarse grid and every disagreement is
/// bisected down to a pair of adjacent doubles, so each piece ends exactly
/// where the next begins. Random probes inside each piece check the result.
fn scan_axis<F>(digest_at: F, settings: &ScanSettings) -> Result<(Vec<Piece>, Vec<f64>)>
where
    F: Fn(f64) -> Result<String> + Sync,
{
    let grid = unit_grid(settings.coarse_step)?;
    let coarse: Vec<String> = grid.par_iter().map(|&v| digest_at(v)).collect::<Result<_>>()?;

    let brackets: Vec<Vec<Breakpoint>> = (0..grid.len() - 1)
        .into_par_iter()
        .map(|w| {
            let mut out = Vec::new();
            if coarse[w] != coarse[w + 1] {
                refine(&digest_at, (grid[w], &coarse[w]), (grid[w + 1], &coarse[w + 1]), &mut out)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut pieces = Vec::new();
    let mut lo = 0.0;
    let mut digest = coarse[0].clone();
    for bp in brackets.into_iter().flatten() {
        pieces.push(Piece { lo, hi: bp.left, digest });
        lo = bp.right;
        digest = bp.digest;
    }
    pieces.push(Piece { lo, hi: 1.0, digest });

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut probes = Vec::with_capacity(pieces.len() * settings.probes);
    for (idx, p) in pieces.iter().enumerate() {
        for _ in 0..settings.probes {
            probes.push((idx, rng.random_range(p.lo..=p.hi)));
        }
    }
    let results: Vec<String> = probes.par_iter().map(|&(_, v)| digest_at(v)).collect::<Result<_>>()?;
    let mismatched =
        probes.iter().zip(&results).filter(|((idx, _), d)| **d != pieces[*idx].digest).map(|((_, v), _)| *v).collect();
    Ok((pieces, mismatched))
}

/// Adjacent doubles `left < right` where the digest changes to `digest`.
struct Breakpoint {
    left: f64,
    right: f64,
    digest: String,
}

/// Bisects on the bit patterns of nonnegative doubles, which order the same
/// way as the values, so at most 64 halvings reach adjacent doubles.
fn refine<F>(digest_at: &F, (a, da): (f64, &str), (b, db): (f64, &str), out: &mut Vec<Breakpoint>) -> Result<()>
where
    F: Fn(f64) -> Result<String>,
{
    let (ab, bb) = (a.to_bits(), b.to_bits());
    if bb - ab <= 1 {
        out.push(Breakpoint { left: a, right: b, digest: db.to_string() });
        return Ok(());
    }
    let mid = f64::from_bits(ab + (bb - ab) / 2);
    let dm = digest_at(mid)?;
    if dm == da {
        refine(digest_at, (mid, &dm), (b, db), out)
    } else if dm == db {
        refine(digest_at, (a, da), (mid, &dm), out)
    } else {
        refine(digest_at, (a, da), (mid, &dm), out)?;
        refine(digest_at, (mid, &dm), (b, db), out)
    }
}

fn require(d: Option<String>) -> Result<String> {
    d.ok_or_else(|| Error::InvalidInput("search hit the node cap during a scan".into()))
}

/// Pieces of the full search tree along one parameter axis.
pub fn find_pieces(problem: &ScanProblem, axis: Axis, settings: &ScanSettings) -> Result<PieceReport> {
    let (pieces, mismatched) = scan_axis(|v| require(problem.digest(&axis.apply(&problem.params, v))?), settings)?;
    let bounds = theoretical_bounds(problem.params.depth_limit as u32, 2, problem.action_cap(), 2)?;
    Ok(PieceReport {
        axis,
        consistent: mismatched.is_empty(),
        pieces,
        probes_per_piece: settings.probes,
        mismatched_probes: mismatched,
        theoretical_cap: bounds.boxes_multi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub mu: Piece,
    pub lambda: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleReport {
    pub mu_axis: Axis,
    pub strips: Vec<Strip>,
    pub consistent: bool,
    pub probes_per_rectangle: usize,
    pub mismatched_probes: Vec<(f64, f64)>,
    /// Cap `k^(D(9+D)) b^D`.
    #[serde(with = "decimal")]
    pub cap_statement: BigUint,
    /// Tighter cap `k^(D(9+D)/2) b^D`.
    #[serde(with = "decimal")]
    pub cap_proof: BigUint,
}

impl RectangleReport {
    pub fn rectangle_count(&self) -> usize {
        self.strips.iter().map(|s| s.lambda.len()).sum()
    }

    pub fn within_cap(&self) -> bool {
        BigUint::from(self.rectangle_count()) <= self.cap_statement
    }
}

/// Rectangles of `(mu, lambda)` on which the full search tree is constant.
///
/// With fathoming suppressed the tree does not depend on `lambda`, and its
/// pieces along `mu` give vertical strips. Inside a strip every action the
/// full search can take is already fixed, so a `lambda` scan at the strip's
/// midpoint splits it into rectangles. Random probes over each rectangle
/// check the result. Directed cutoff reads the incumbent, which breaks the
/// strip argument, so scans should use pairs without it.
pub fn find_rectangles(problem: &ScanProblem, mu_axis: Axis, settings: &ScanSettings) -> Result<RectangleReport> {
    if mu_axis == Axis::Lambda {
        return Err(Error::InvalidInput("the strip axis must be a mu axis".into()));
    }
    let (mu_pieces, mut mismatched_mu) =
        scan_axis(|v| require(problem.suppressed_digest(&mu_axis.apply(&problem.params, v))?), settings)?;
    let mut strips = Vec::with_capacity(mu_pieces.len());
    let mut mismatched = Vec::new();
    for (t, mu) in mu_pieces.into_iter().enumerate() {
        let mid = 0.5 * (mu.lo + mu.hi);
        let at_mid = mu_axis.apply(&problem.params, mid);
        let lambda_settings = ScanSettings { seed: settings.seed.wrapping_add(1 + t as u64), ..*settings };
        let (lambda, bad) = scan_axis(|v| require(problem.digest(&Axis::Lambda.apply(&at_mid, v))?), &lambda_settings)?;
        mismatched.extend(bad.into_iter().map(|l| (mid, l)));

        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x5eed_0000 ^ t as u64);
        let mut probes = Vec::new();
        for (idx, piece) in lambda.iter().enumerate() {
            for _ in 0..settings.probes {
                let m = rng.random_range(mu.lo..=mu.hi);
                let l = rng.random_range(piece.lo..=piece.hi);
                probes.push((idx, m, l));
            }
        }
        let digests: Vec<String> = probes
            .par_iter()
            .map(|&(_, m, l)| require(problem.digest(&Axis::Lambda.apply(&mu_axis.apply(&problem.params, m), l))?))
            .collect::<Result<_>>()?;
        for ((idx, m, l), d) in probes.iter().zip(&digests) {
            if *d != lambda[*idx].digest {
                mismatched.push((*m, *l));
            }
        }
        strips.push(Strip { mu, lambda });
    }
    mismatched.extend(mismatched_mu.drain(..).map(|m| (m, f64::NAN)));
    let bounds = theoretical_bounds(problem.params.depth_limit as u32, 2, problem.action_cap(), 1)?;
    Ok(RectangleReport {
        mu_axis,
        strips,
        consistent: mismatched.is_empty(),
        probes_per_rectangle: settings.probes,
        mismatched_probes: mismatched,
        cap_statement: bounds.rects_2d,
        cap_proof: bounds.rects_2d_proof,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootedReport {
    pub passed: bool,
    /// Set when the suppressed search hit the node cap and nothing was checked.
    pub skipped: bool,
    pub nodes_checked: usize,
    /// Child-index route from the root to the first mismatch.
    pub first_failure: Option<Vec<usize>>,
}

/// Checks that every root-to-node path of the full search occurs, with the
/// same actions, in the tree built with fathoming suppressed.
pub fn verify_rooted_subtree(problem: &ScanProblem) -> Result<RootedReport> {
    let hooks = problem.hooks()?;
    let root = BncData::new(problem.ip.clone())?;
    let full = run(root.clone(), &hooks, &problem.params, &problem.limits)?;
    let suppressed = run_suppressed(root, &hooks, &problem.params, &problem.limits)?;
    if suppressed.truncated || full.truncated {
        return Ok(RootedReport { passed: false, skipped: true, nodes_checked: 0, first_failure: None });
    }
    for id in 0..full.len() {
        if let Err(route) = rooted_path_in(&full, id, &suppressed) {
            return Ok(RootedReport {
                passed: false,
                skipped: false,
                nodes_checked: id + 1,
                first_failure: Some(route),
            });
        }
    }
    Ok(RootedReport { passed: true, skipped: false, nodes_checked: full.len(), first_failure: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub nodes: usize,
    pub evaluations: usize,
    pub mismatches: usize,
}

/// Re-evaluates every path-wise hook and every registered rule at each node
/// of the full search tree, once on the tree and once on a tree holding only
/// the root-to-node path, and counts results that differ in any bit.
pub fn pathwise_replay(problem: &ScanProblem) -> Result<ReplayReport> {
    use crate::scoring::RuleKind;
    use crate::tree::SearchHooks;

    let hooks = problem.hooks()?;
    let tree = run(BncData::new(problem.ip.clone())?, &hooks, &problem.params, &problem.limits)?;
    let rules = ScoreRuleId::registry();
    let mut report = ReplayReport { nodes: tree.len(), evaluations: 0, mismatches: 0 };
    let mut tally = |same: bool| {
        report.evaluations += 1;
        if !same {
            report.mismatches += 1;
        }
    };
    for id in 0..tree.len() {
        let full = tree.path(id)?;
        let (only, last) = tree.path_only(id)?;
        let part = only.path(last)?;
        for kind in [bnc::BRANCH, bnc::CUT] {
            let actions = hooks.actions(kind, &full)?;
            tally(actions == hooks.actions(kind, &part)?);
            let wanted = if kind == bnc::BRANCH { RuleKind::Branch } else { RuleKind::Cut };
            for rule in rules.iter().filter(|r| r.kind() == wanted) {
                for a in &actions {
                    let x = hooks.action_score(kind, rule, &full, a)?;
                    let y = hooks.action_score(kind, rule, &part, a)?;
                    tally(x.to_bits() == y.to_bits());
                }
            }
        }
        for rule in rules.iter().filter(|r| r.kind() == RuleKind::Node) {
            let x = hooks.node_score(rule, &full, &problem.params)?;
            let y = hooks.node_score(rule, &part, &problem.params)?;
            tally(x.to_bits() == y.to_bits());
        }
        let taken = &tree.nodes[id].actions_taken;
        if !taken.is_empty() {
            tally(hooks.children(&full, taken)? == hooks.children(&part, taken)?);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// `k^(D(D-1)/2) b^D`
    #[serde(with = "decimal")]
    pub pieces_1d: BigUint,
    /// `k^(D(9+D)) b^D`
    #[serde(with = "decimal")]
    pub rects_2d: BigUint,
    /// `k^(D(9+D)/2) b^D`
    #[serde(with = "decimal")]
    pub rects_2d_proof: BigUint,
    /// `k^(d D(D-1)/2) b^(d D)`
    #[serde(with = "decimal")]
    pub boxes_multi: BigUint,
    /// `D^2 log2 k + D log2 b`, an order quantity.
    pub pdim_order: f64,
}

pub fn theoretical_bounds(delta: u32, k: u64, b: u64, d: u32) -> Result<Bounds> {
    if delta == 0 || k == 0 || b == 0 || d == 0 {
        return Err(Error::InvalidInput("bounds need delta, k, b, d >= 1".into()));
    }
    let kb = BigUint::from(k);
    let bb = BigUint::from(b);
    let tri = delta * (delta - 1) / 2;
    Ok(Bounds {
        pieces_1d: kb.pow(tri) * bb.pow(delta),
        rects_2d: kb.pow(delta * (9 + delta)) * bb.pow(delta),
        rects_2d_proof: kb.pow(delta * (9 + delta) / 2) * bb.pow(delta),
        boxes_multi: kb.pow(d * tri) * bb.pow(d * delta),
        pdim_order: f64::from(delta).powi(2) * (k as f64).log2() + f64::from(delta) * (b as f64).log2(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub spec: KnapsackSpec,
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub trials: usize,
    /// `(mu_cut, lambda)` points.
    pub grid: Vec<(f64, f64)>,
    pub pair: ScorePair,
    pub mu_branch: f64,
    pub branch_rules: (ScoreRuleId, ScoreRuleId),
    pub depth_limit: Option<usize>,
    pub node_cap: usize,
    /// First training seed; defaults to just past the test seeds.
    pub train_seed: Option<u64>,
}

impl GapConfig {
    pub fn new(spec: KnapsackSpec, train_sizes: Vec<usize>, test_size: usize) -> Self {
        GapConfig {
            spec,
            train_sizes,
            test_size,
            trials: 10,
            grid: vec![(0.0, 1.0), (0.25, 1.0), (0.5, 1.0), (0.75, 1.0), (1.0, 1.0)],
            pair: ScorePair::Ep,
            mu_branch: 1.0,
            branch_rules: (ScoreRuleId::MostFractional, ScoreRuleId::MostFractional),
            depth_limit: None,
            node_cap: 100_000,
            train_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub train_sizes: Vec<usize>,
    /// Sup over the grid of the train/test mean difference, averaged over trials.
    pub gaps: Vec<f64>,
    /// Largest tree size seen, for normalization.
    pub cost_cap: usize,
    /// Least-squares slope of `log gap` against `log N`; `None` when undefined.
    pub slope: Option<f64>,
}

impl GapReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("N,gap\n");
        for (n, g) in self.train_sizes.iter().zip(&self.gaps) {
            let _ = writeln!(s, "{n},{g:.9}");
        }
        match self.slope {
            Some(v) => {
                let _ = writeln!(s, "slope,{v:.6}");
            }
            None => s.push_str("slope,undefined\n"),
        }
        s
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}

/// Per-instance tree sizes over the grid, for `count` instances from `first_seed`.
fn grid_costs(cfg: &GapConfig, count: usize, first_seed: u64) -> Result<Vec<Vec<usize>>> {
    let samples = knapsack_samples(&cfg.spec, count, first_seed)?;
    let limits = Limits { node_cap: cfg.node_cap, ..Limits::default() };
    samples
        .par_iter()
        .map(|s| {
            let depth = cfg.depth_limit.unwrap_or_else(|| default_depth_limit(s.ip.num_vars));
            cfg.grid
                .iter()
                .map(|&(mu, lambda)| {
                    let params = bnc::params(cfg.mu_branch, mu, lambda, cfg.branch_rules, cfg.pair.rules(), depth);
                    Ok(bnc::solve(&s.ip, s.pool.clone(), BncConfig::default(), &params, &limits)?.tree_size)
                })
                .collect()
        })
        .collect()
}

fn grid_means(costs: &[Vec<usize>], points: usize) -> Vec<f64> {
    (0..points).map(|g| costs.iter().map(|c| c[g] as f64).sum::<f64>() / costs.len() as f64).collect()
}

/// Uniform-convergence gap of mean tree size, estimated against a held-out
/// test sample. Training sets within one trial are nested prefixes of a
/// single draw; the test set is shared across trials.
pub fn generalization_gap(cfg: &GapConfig) -> Result<GapReport> {
    if cfg.train_sizes.is_empty() || cfg.train_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("training sizes must be nonempty and strictly increasing".into()));
    }
    if cfg.grid.is_empty() || cfg.trials == 0 || cfg.test_size == 0 {
        return Err(Error::InvalidInput("grid, trials and test size must be nonempty".into()));
    }
    let largest = *cfg.train_sizes.last().expect("nonempty");
    let test = grid_costs(cfg, cfg.test_size, cfg.spec.seed)?;
    let test_means = grid_means(&test, cfg.grid.len());
    let mut cost_cap = test.iter().flatten().copied().max().unwrap_or(0);

    let mut gaps = vec![0.0; cfg.train_sizes.len()];
    for t in 0..cfg.trials {
        let base = cfg.train_seed.unwrap_or(cfg.spec.seed.wrapping_add(cfg.test_size as u64));
        let first = base.wrapping_add((t * largest) as u64);
        let train = grid_costs(cfg, largest, first)?;
        cost_cap = cost_cap.max(train.iter().flatten().copied().max().unwrap_or(0));
        for (slot, &n) in cfg.train_sizes.iter().enumerate() {
            let means = grid_means(&train[..n], cfg.grid.len());
            let sup = means.iter().zip(&test_means).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            gaps[slot] += sup / cfg.trials as f64;
        }
    }
    let slope = if gaps.iter().all(|&g| g > 0.0) {
        let lx: Vec<f64> = cfg.train_sizes.iter().map(|&n| (n as f64).ln()).collect();
        let ly: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
        fit_slope(&lx, &ly)
    } else {
        None
    };
    Ok(GapReport { train_sizes: cfg.train_sizes.clone(), gaps, cost_cap, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JeroslowReport {
    pub single_var_nodes: usize,
    pub multivar_nodes: usize,
}

/// Tree sizes on `max sum x, 2 sum x = n` with single-variable branching and
/// with one branch on the sum of all variables.
pub fn jeroslow(n: usize) -> Result<JeroslowReport> {
    if n.is_multiple_of(2) || !(3..=15).contains(&n) {
        return Err(Error::InvalidInput(format!("n must be odd and in 3..=15, got {n}")));
    }
    let ip = jeroslow_instance(n)?;
    let params = bnc::params(
        1.0,
        1.0,
        1.0,
        (ScoreRuleId::MostFractional, ScoreRuleId::MostFractional),
        (ScoreRuleId::Efficacy, ScoreRuleId::Parallelism),
        n + 1,
    );
    let no_cuts = BncConfig { cuts_per_node: 0, ..BncConfig::default() };
    let single = bnc::solve(&ip, vec![], no_cuts.clone(), &params, &Limits::default())?;
    let multi_cfg = BncConfig { branch_mode: BranchMode::MultiVariable(vec![(0..n).collect()]), ..no_cuts };
    let multi = bnc::solve(&ip, vec![], multi_cfg, &params, &Limits::default())?;
    for out in [&single, &multi] {
        if out.status != RunStatus::Solved {
            return Err(Error::InvalidInput(format!("search ended {:?}", out.status)));
        }
    }
    Ok(JeroslowReport { single_var_nodes: single.tree_size, multivar_nodes: multi.tree_size })
}

/// Distinct digests in a list, for summaries.
pub fn distinct<'a>(digests: impl IntoIterator<Item = &'a String>) -> usize {
    digests.into_iter().collect::<BTreeSet<_>>().len()
}
