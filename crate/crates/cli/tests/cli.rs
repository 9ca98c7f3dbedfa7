use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use perfgame_core::GameSpec;

fn games() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games")
}

fn perfgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfgame")).args(args).env("RUST_LOG", "info").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn oracle_prints_the_report() {
    let game = games().join("scalar_duopoly.json");
    for (kind, expected) in [("nash", 2.0 / 7.0), ("perf-stable", 0.4), ("social-opt", 1.0 / 3.0)] {
        let out = perfgame(&["oracle", "--game", path_str(&game), "--kind", kind]);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        for p in v["point"].as_array().unwrap() {
            assert!((p.as_f64().unwrap() - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn certify_reports_the_spectral_gap() {
    let out = perfgame(&["certify", "--game", path_str(&games().join("strategic.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["spectral_gap"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["certificate"]["h_monotone"], "SufficientSpectralCondition");
}

#[test]
fn usage_errors_exit_with_two() {
    let game = games().join("scalar_duopoly.json");
    let g = path_str(&game);
    for args in [
        vec!["solve", "--game", g, "--alg", "frobnicate"],
        vec!["solve", "--game", g],
        vec!["oracle", "--game", g, "--kind", "nash", "--colour"],
        vec!["oracle", "--game", g, "--kind", "best"],
        vec!["launch"],
        vec![],
    ] {
        let out = perfgame(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn malformed_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"dims": {"decision": [1], "data": [1]}}"#).unwrap();
    let out = perfgame(&["oracle", "--game", path_str(&bad), "--kind", "nash"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(out.stderr.split(|b| *b == b'\n').rev().find(|l| !l.is_empty()).unwrap()).unwrap();
    assert_eq!(err["error"], "usage");
    let out = perfgame(&["oracle", "--game", path_str(&dir.path().join("missing.json")), "--kind", "nash"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_failures_exit_with_one() {
    // λ = 2a makes the Nash system of this monopoly singular.
    let game = r#"{
      "dims": {"decision": [1], "data": [1]},
      "feasible": [{"type": "whole_space"}],
      "family": [{"base": {"type": "deterministic", "mean": [1.0]}, "own": [[1.0]]}],
      "losses": [{"type": "revenue", "lambda": 2.0, "scale": 1.0}],
      "separable": true
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singular.json");
    fs::write(&path, game).unwrap();
    let out = perfgame(&["oracle", "--game", path_str(&path), "--kind", "nash"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"domain\""));
}

#[test]
fn solve_is_repeatable_and_honours_overrides() {
    let game = games().join("scalar_duopoly.json");
    let args = ["solve", "--game", path_str(&game), "--alg", "rsgm", "--seed", "3", "--iterations", "500", "--step-size", "0.02"];
    let (a, b) = (perfgame(&args), perfgame(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["iterations"], 500);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["config"]["step_size"], 0.02);
    assert_eq!(v["records"].as_array().unwrap().len(), 501);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solver.json");
    fs::write(&cfg, r#"{"algorithm": "sgm", "step_size": 0.05, "iterations": 100}"#).unwrap();
    let out = perfgame(&["solve", "--game", path_str(&game), "--config", path_str(&cfg), "--iterations", "40"]);
    let v = json(&out);
    assert_eq!((v["solver"].as_str(), v["iterations"].as_u64()), (Some("sgm"), Some(40)));
}

#[test]
fn experiment_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = games().join("duopoly_experiment.json");
    let mut stdout = Vec::new();
    for out_dir in [&a, &b] {
        let out = perfgame(&["experiment", "--config", path_str(&cfg), "--outdir", path_str(out_dir), "--seed", "11", "--iterations", "300"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        stdout.push(out.stdout);
    }
    assert_eq!(stdout[0], stdout[1]);
    let mut names: Vec<String> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["aggregate.csv", "aggregate.svg", "report.json", "rsgm_seed11.csv", "sgm_seed11.csv"]);
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_slice(&stdout[0]).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([11]));
    assert!((report["efficiency"]["poa_ne"].as_f64().unwrap() - 48.0 / 49.0).abs() < 1e-12);
}

#[test]
fn rideshare_output_is_a_game_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("market.json");
    let out = perfgame(&["rideshare-gen", "--locations", "3", "--price", "10", "--demand", "60,100,140", "--seed", "5", "--output", path_str(&path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let spec = GameSpec::load(&path).unwrap();
    assert_eq!(spec.family[0].own[1][1], -15.0);
    assert_eq!(spec.family[0].cross[1][1], 7.5);
    let out = perfgame(&["oracle", "--game", path_str(&path), "--kind", "perf-stable"]);
    assert_eq!(out.status.code(), Some(0));
    let bad = perfgame(&["rideshare-gen", "--locations", "2", "--price", "-1", "--demand", "5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn help_lists_every_flag() {
    for (name, flags) in perfgame::FLAG_TABLE {
        let out = perfgame(&[name, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let help = String::from_utf8_lossy(&out.stdout);
        for flag in *flags {
            assert!(help.contains(&format!("--{flag}")), "{name} --help misses --{flag}");
        }
    }
}
