use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::{commands, parse};

fn argv(args: &[&str], out_dir: &Path) -> Vec<OsString> {
    let mut v: Vec<OsString> = std::iter::once("bctree").chain(args.iter().copied()).map(OsString::from).collect();
    v.push("--out-dir".into());
    v.push(out_dir.as_os_str().to_owned());
    v
}

/// Exit code `main` would return.
fn exit_code(args: &[&str], out_dir: &Path) -> i32 {
    match parse(argv(args, out_dir)).and_then(|cli| commands::run(&cli)) {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    }
}

fn run_json(args: &[&str], out_dir: &Path, artifact: &str) -> Value {
    assert_eq!(exit_code(args, out_dir), 0, "{args:?}");
    serde_json::from_str(&fs::read_to_string(out_dir.join(artifact)).unwrap()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn jeroslow_reports_both_tree_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let v = run_json(&["jeroslow", "--n", "5"], dir.path(), "jeroslow.json");
    assert!(v["single_var_nodes"].as_u64().unwrap() >= 4);
    assert_eq!(v["multivar_nodes"], 3);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "jeroslow");
    assert_eq!(manifest["artifacts"][0], "jeroslow.json");
    assert_eq!(manifest["flags"]["command"]["jeroslow"]["n"], 5);
}

#[test]
fn bounds_with_single_level() {
    let dir = tempfile::tempdir().unwrap();
    let v = run_json(&["bounds", "--delta", "1", "--k", "2", "--b", "4", "--d", "1"], dir.path(), "bounds.json");
    assert_eq!(v["pieces_1d"], "4");
}

#[test]
fn solve_matches_enumeration_on_fixture() {
    // optimum 9 at (1, 1, 0, 0) by enumeration; the LP optimum is fractional
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("tiny.ip");
    for mode in ["single", "multi", "disj"] {
        let args = [
            "solve",
            "--in",
            input.to_str().unwrap(),
            "--mu-branch",
            "1",
            "--mu-cut",
            "0.3",
            "--lambda",
            "1",
            "--branch-mode",
            mode,
        ];
        let v = run_json(&args, dir.path(), "solve.json");
        assert_eq!(v["status"], "solved");
        assert_eq!(v["objective"], 9.0);
        assert_eq!(v["incumbent"], serde_json::json!([1, 1, 0, 0]));
        assert!(v["tree_size"].as_u64().unwrap() > 1);
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ip");
    fs::write(&bad, "IP v1\nvars 2\nmaximize 1 x\n").unwrap();
    let bad = bad.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["frobnicate"],
        vec!["jeroslow", "--bogus"],
        vec!["jeroslow", "--n", "4"],
        vec!["jeroslow", "--jobs", "0"],
        vec!["solve", "--in", "/definitely/not/here.ip"],
        vec!["solve", "--in", bad],
        vec!["solve", "--in", "x.ip", "--branch-rules", "mostfrac"],
        vec!["sweep", "--step", "0.3"],
        vec!["sweep", "--pair", "xy"],
    ];
    for args in cases {
        assert_eq!(exit_code(&args, dir.path()), 1, "{args:?}");
    }
    let err = parse(argv(&["solve", "--in", bad], dir.path())).and_then(|cli| commands::run(&cli)).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn failed_verification_exits_two() {
    // directed cutoff reads the incumbent, which the unpruned search never has
    let dir = tempfile::tempdir().unwrap();
    let spec = bctree::knapsack::KnapsackSpec { weight_sd: 10.0, ..bctree::knapsack::KnapsackSpec::chvatal(6, 2, 102) };
    let path = dir.path().join("inst.ip");
    fs::write(&path, bctree::knapsack::generate(&spec).unwrap().to_text()).unwrap();
    let path = path.to_str().unwrap();
    let base = ["verify-subtree", "--in", path, "--mu-branch", "0.2", "--mu-cut", "0.9", "--depth-limit", "4"];
    assert_eq!(exit_code(&[&base[..], &["--pair", "dp"]].concat(), dir.path()), 2);
    let report = run_json(&[&base[..], &["--pair", "ep"]].concat(), dir.path(), "subtree.json");
    assert_eq!(report["passed"], true);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("run");
    assert_eq!(exit_code(&["sweep", "--items", "6", "--dry-run"], &target), 0);
    assert!(!target.exists());
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 7, "out_dir": "ignored"}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let flags = |args: &[&str]| serde_json::to_value(parse(argv(args, dir.path())).unwrap()).unwrap();
    let from_config = flags(&["jeroslow", "--config", cfg]);
    assert_eq!(from_config["command"]["jeroslow"]["n"], 7);
    assert_eq!(from_config["common"]["out_dir"], dir.path().to_str().unwrap());
    // explicit flags win over the file
    assert_eq!(flags(&["jeroslow", "--config", cfg, "--n", "3"])["command"]["jeroslow"]["n"], 3);
    fs::write(dir.path().join("broken.json"), "{").unwrap();
    let broken = dir.path().join("broken.json");
    assert_eq!(exit_code(&["jeroslow", "--config", broken.to_str().unwrap()], dir.path()), 1);
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--items", "5", "--samples", "4", "--step", "0.25", "--seed", "9", "--svg"];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert_eq!(exit_code(&args, dir.path()), 0);
        let files: Vec<Vec<u8>> =
            ["sweep.csv", "sweep.json", "sweep.svg"].iter().map(|n| fs::read(dir.path().join(n)).unwrap()).collect();
        snapshots.push(files);
    }
    assert_eq!(snapshots[0], snapshots[1]);
}
