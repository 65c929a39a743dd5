use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bctree::bnc::{self, BncConfig, BranchMode, CutPlane};
use bctree::experiments::{
    argmin_mu, find_pieces, find_rectangles, generalization_gap, jeroslow, sweep_csv, sweep_mu, theoretical_bounds,
    verify_rooted_subtree, GapConfig, ScanProblem, ScanSettings, SweepConfig,
};
use bctree::ip::{read_instance, IpInstance};
use bctree::knapsack::{extended_cover_cuts, generate, KnapsackSpec, KnapsackStructure};
use bctree::scoring::{RuleKind, ScoreRuleId};
use bctree::tree::{dump_jsonl, Limits, ScoreParams};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::error::CliError;
use crate::svg::{line_chart, Series};

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    flags: &'a Cli,
    seed: u64,
    artifacts: &'a [String],
    engine_version: &'a str,
    wall_time_seconds: f64,
}

/// Collects artifacts written under the output directory.
struct Output {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Output {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|source| CliError::Write { path: self.dir.clone(), source })?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Write { path, source })?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<String, CliError> {
        let text = to_json(value);
        self.write(name, &format!("{text}\n"))?;
        Ok(text)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.common.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(usage)?;
    }
    let started = Instant::now();
    let mut out = Output { dir: cli.common.out_dir.clone(), artifacts: Vec::new() };
    let seed = cli.common.seed;
    let dry = cli.common.dry_run;
    let svg = cli.common.svg;
    let done = match &cli.command {
        Command::Generate(a) => generate_cmd(a, seed, dry, &mut out)?,
        Command::Solve(a) => solve_cmd(a, dry, &mut out)?,
        Command::Sweep(a) => sweep_cmd(a, seed, dry, svg, &mut out)?,
        Command::VerifyPieces(a) => pieces_cmd(a, seed, dry, &mut out)?,
        Command::VerifySubtree(a) => subtree_cmd(a, dry, &mut out)?,
        Command::Bounds(a) => bounds_cmd(a, dry, &mut out)?,
        Command::Gap(a) => gap_cmd(a, seed, dry, svg, &mut out)?,
        Command::Jeroslow(a) => jeroslow_cmd(a, dry, &mut out)?,
    };
    if dry {
        println!("{}", to_json(cli));
        return Ok(());
    }
    let artifacts = out.artifacts.clone();
    out.write_json(
        "manifest.json",
        &RunManifest {
            subcommand: cli.command.name(),
            flags: cli,
            seed,
            artifacts: &artifacts,
            engine_version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
    )?;
    done
}

/// Outcome of a subcommand that ran: `Err` when a verification failed after
/// its artifacts were written.
type Verdict = Result<(), CliError>;

fn spec_of(f: &FamilyArgs, seed: u64) -> Result<KnapsackSpec, CliError> {
    let spec = KnapsackSpec {
        num_items: f.items,
        num_knapsacks: f.knapsacks,
        reverse: f.reverse,
        seed,
        weight_mean: f.weight_mean,
        weight_sd: f.weight_sd,
    };
    spec.validate().map_err(usage)?;
    Ok(spec)
}

fn rule_pair(rules: &[ScoreRuleId], kind: RuleKind, flag: &str) -> Result<(ScoreRuleId, ScoreRuleId), CliError> {
    match rules {
        [a, b] if a.kind() == kind && b.kind() == kind => Ok((*a, *b)),
        _ => Err(usage(format!("--{flag} needs two {kind:?} rules separated by a comma"))),
    }
}

fn load_instance(path: &Path) -> Result<IpInstance, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    read_instance(&text).map_err(|source| CliError::Instance { path: path.to_path_buf(), source })
}

/// Instance, cut pool and search settings shared by the single-instance commands.
fn scan_problem(a: &SearchArgs) -> Result<ScanProblem, CliError> {
    let ip = load_instance(&a.input)?;
    let pool: Vec<CutPlane> = match KnapsackStructure::detect(&ip) {
        Some(s) if !a.no_cuts => extended_cover_cuts(&s),
        _ => Vec::new(),
    };
    let branch_mode = BranchMode::named(&a.branch_mode, ip.num_vars).map_err(usage)?;
    let config = BncConfig { branch_mode, cuts_per_node: a.cuts_per_node, ..BncConfig::default() };
    config.validate(ip.num_vars).map_err(usage)?;
    let depth = a.depth_limit.unwrap_or_else(|| bctree::experiments::default_depth_limit(ip.num_vars));
    let params: ScoreParams = bnc::params(
        a.mu_branch,
        a.mu_cut,
        a.lambda,
        rule_pair(&a.branch_rules, RuleKind::Branch, "branch-rules")?,
        a.pair.rules(),
        depth,
    );
    params.validate(2).map_err(usage)?;
    if a.node_cap == 0 {
        return Err(usage("--node-cap must be positive"));
    }
    let limits = Limits { node_cap: a.node_cap, ..Limits::default() };
    Ok(ScanProblem { ip, pool, config, params, limits })
}

fn generate_cmd(a: &GenerateArgs, seed: u64, dry: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let spec = spec_of(&a.family, seed)?;
    if a.count == 0 {
        return Err(usage("--count must be positive"));
    }
    if dry {
        return Ok(Ok(()));
    }
    for s in 0..a.count as u64 {
        let inst = generate(&spec.with_seed(seed + s))?;
        out.write(&format!("instance_{}.ip", seed + s), &inst.to_text())?;
    }
    Ok(Ok(()))
}

fn solve_cmd(a: &SolveArgs, dry: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let p = scan_problem(&a.search)?;
    if dry {
        return Ok(Ok(()));
    }
    let outcome = bnc::solve(&p.ip, p.pool, p.config, &p.params, &p.limits)?;
    let report = json!({
        "status": outcome.status,
        "ip_status": outcome.ip_status,
        "objective": outcome.objective,
        "tree_size": outcome.tree_size,
        "incumbent": outcome.solution,
    });
    let text = out.write_json("solve.json", &report)?;
    println!("{text}");
    if a.dump_tree {
        out.write("tree.jsonl", &dump_jsonl(&outcome.tree))?;
    }
    Ok(Ok(()))
}

fn sweep_cmd(a: &SweepArgs, seed: u64, dry: bool, svg: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let spec = spec_of(&a.family, seed)?;
    let cfg = SweepConfig {
        grid_step: a.step,
        samples: a.samples,
        lambda: a.lambda,
        mu_branch: a.mu_branch,
        branch_rules: rule_pair(&a.branch_rules, RuleKind::Branch, "branch-rules")?,
        cuts_per_node: a.cuts_per_node,
        node_cap: a.node_cap,
        ..SweepConfig::new(spec, a.pair)
    };
    bctree::experiments::unit_grid(a.step).map_err(usage)?;
    for (v, flag) in [(a.lambda, "lambda"), (a.mu_branch, "mu-branch")] {
        if !(0.0..=1.0).contains(&v) {
            return Err(usage(format!("--{flag} must lie in [0, 1]")));
        }
    }
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if dry {
        return Ok(Ok(()));
    }
    let rows = sweep_mu(&cfg)?;
    out.write("sweep.csv", &sweep_csv(&rows))?;
    let means = rows.iter().map(|r| r.mean);
    let summary = json!({
        "pair": a.pair,
        "reverse": a.family.reverse,
        "argmin_mu": argmin_mu(&rows),
        "min_mean": means.clone().fold(f64::INFINITY, f64::min),
        "max_mean": means.fold(f64::NEG_INFINITY, f64::max),
        "truncated_runs": rows.iter().map(|r| r.truncated).sum::<usize>(),
    });
    println!("{}", out.write_json("sweep.json", &summary)?);
    if svg {
        let label = format!("{} {}", if a.family.reverse { "reverse" } else { "chvatal" }, a.pair.name());
        let series = Series { label: &label, points: rows.iter().map(|r| (r.mu, r.mean)).collect() };
        out.write("sweep.svg", &line_chart("Mean tree size", "mu", "tree size", &[series]))?;
    }
    Ok(Ok(()))
}

fn pieces_cmd(a: &PiecesArgs, seed: u64, dry: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let p = scan_problem(&a.search)?;
    if !(a.coarse_step > 0.0 && a.coarse_step <= 0.5) {
        return Err(usage("--coarse-step must lie in (0, 0.5]"));
    }
    if a.two_d && a.axis == bctree::experiments::Axis::Lambda {
        return Err(usage("--two-d scans a weight axis against lambda; pick mu-branch or mu-cut"));
    }
    let settings = ScanSettings { coarse_step: a.coarse_step, probes: a.probes, seed };
    if dry {
        return Ok(Ok(()));
    }
    let (consistent, within) = if a.two_d {
        let report = find_rectangles(&p, a.axis, &settings)?;
        let mut csv = String::from("mu_lo,mu_hi,lambda_lo,lambda_hi,digest\n");
        for strip in &report.strips {
            for l in &strip.lambda {
                let _ = writeln!(csv, "{:e},{:e},{:e},{:e},{}", strip.mu.lo, strip.mu.hi, l.lo, l.hi, l.digest);
            }
        }
        out.write("rectangles.csv", &csv)?;
        out.write_json("rectangles.json", &report)?;
        println!(
            "{}",
            to_json(&json!({
                "rectangles": report.rectangle_count(),
                "consistent": report.consistent,
                "within_cap": report.within_cap(),
            }))
        );
        (report.consistent, report.within_cap())
    } else {
        let report = find_pieces(&p, a.axis, &settings)?;
        out.write("pieces.csv", &report.csv())?;
        out.write_json("pieces.json", &report)?;
        println!(
            "{}",
            to_json(&json!({
                "pieces": report.piece_count(),
                "consistent": report.consistent,
                "within_cap": report.within_cap(),
            }))
        );
        (report.consistent, report.within_cap())
    };
    if consistent && within {
        Ok(Ok(()))
    } else {
        Ok(Err(bctree::Error::Numerical("piece verification failed".into()).into()))
    }
}

fn subtree_cmd(a: &SubtreeArgs, dry: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let p = scan_problem(&a.search)?;
    if dry {
        return Ok(Ok(()));
    }
    let report = verify_rooted_subtree(&p)?;
    println!("{}", out.write_json("subtree.json", &report)?);
    if report.passed || report.skipped {
        Ok(Ok(()))
    } else {
        Ok(Err(bctree::Error::Numerical("tree is not a rooted subtree of the suppressed tree".into()).into()))
    }
}

fn bounds_cmd(a: &BoundsArgs, dry: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let bounds = theoretical_bounds(a.delta, a.k, a.b, a.d).map_err(usage)?;
    if !dry {
        println!("{}", out.write_json("bounds.json", &bounds)?);
    }
    Ok(Ok(()))
}

fn gap_cmd(a: &GapArgs, seed: u64, dry: bool, svg: bool, out: &mut Output) -> Result<Verdict, CliError> {
    let spec = spec_of(&a.family, seed)?;
    if a.train_sizes.is_empty() || a.train_sizes.contains(&0) || a.test_size == 0 || a.trials == 0 {
        return Err(usage("--train-sizes, --test-size and --trials must be positive"));
    }
    let cfg = GapConfig {
        trials: a.trials,
        node_cap: a.node_cap,
        ..GapConfig::new(spec, a.train_sizes.clone(), a.test_size)
    };
    if dry {
        return Ok(Ok(()));
    }
    let report = generalization_gap(&cfg)?;
    out.write("gap.csv", &report.csv())?;
    println!("{}", out.write_json("gap.json", &report)?);
    if svg {
        let points = report
            .train_sizes
            .iter()
            .zip(&report.gaps)
            .filter(|(_, g)| **g > 0.0)
            .map(|(&n, &g)| ((n as f64).ln(), g.ln()))
            .collect();
        let series = Series { label: "gap", points };
        out.write("gap.svg", &line_chart("Generalization gap", "ln N", "ln gap", &[series]))?;
    }
    Ok(Ok(()))
}

fn jeroslow_cmd(a: &JeroslowArgs, dry: bool, out: &mut Output) -> Result<Verdict, CliError> {
    if a.n.is_multiple_of(2) || !(3..=15).contains(&a.n) {
        return Err(usage("--n must be odd and between 3 and 15"));
    }
    if !dry {
        let report = jeroslow(a.n)?;
        println!("{}", out.write_json("jeroslow.json", &report)?);
    }
    Ok(Ok(()))
}
