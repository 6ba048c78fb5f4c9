use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn stopsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stopsum")).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    let mut all = vec!["run"];
    all.extend_from_slice(args);
    stopsum(&all)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,survival"));
    lines
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn min_threshold_scenario_gives_exponential_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[s(&scenario("min_threshold_exp.json")), s(dir.path()), "--n", "20000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("survival.csv"));
    assert_eq!(rows.len(), 1001);
    let worst = rows.iter().map(|(t, v)| (v - (-t).exp()).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-4, "{worst}");
    for f in ["laplace.csv", "empirical.csv", "comparison.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let sym = &summary(dir.path())["symbols"];
    assert!((sym["mean_S"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(sym["limit.sup_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn ssqs_scenario_reports_state_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[s(&scenario("ssqs_mm1.json")), s(dir.path()), "--n", "20000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = summary(dir.path());
    let sym = &doc["symbols"];
    assert!((sym["p0"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((sym["p1"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["provenance", "scenario", "symbols"]);
    assert_eq!(doc["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn same_seed_gives_identical_empirical_csv() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let sc = scenario("geiger_det_lock.json");
    for (d, seed) in dirs.iter().zip(["42", "42", "43"]) {
        let out = run(&[s(&sc), s(d.path()), "--seed", seed, "--n", "5000"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes: Vec<Vec<u8>> = dirs.iter().map(|d| fs::read(d.path().join("empirical.csv")).unwrap()).collect();
    assert_eq!(bytes[0], bytes[1]);
    assert_ne!(bytes[0], bytes[2]);
}

#[test]
fn flags_override_scenario_fields() {
    let positional = tempfile::tempdir().unwrap();
    let flagged = tempfile::tempdir().unwrap();
    let out = run(&[
        s(&scenario("redundant_exp_repair.json")),
        s(positional.path()),
        "--out",
        s(flagged.path()),
        "--seed",
        "7",
        "--n",
        "3000",
        "--t-max",
        "12",
        "--h",
        "0.02",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!positional.path().join("summary.json").exists());
    let doc = summary(flagged.path());
    assert_eq!(doc["provenance"]["seed"], 7);
    assert_eq!(doc["provenance"]["n"], 3000);
    assert_eq!(doc["provenance"]["grid"]["t_max"], 12.0);
    assert_eq!(doc["scenario"]["grid"]["h"], 0.02);
    let curve: Value = serde_json::from_str(&fs::read_to_string(flagged.path().join("survival.json")).unwrap()).unwrap();
    assert_eq!(curve["values"].as_array().unwrap().len(), 601);
    assert!(!flagged.path().join("survival.csv").exists());
}

#[test]
fn exit_codes_separate_errors_from_failed_comparisons() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };

    let bad = write(
        "bad.json",
        r#"{"target": "ssqs", "model": {"lambda": 1.0, "service": {"kind": "exponential", "rate": -2.0}}}"#,
    );
    let out = run(&[s(&bad), s(&dir.path().join("o1"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parse error") && err.contains("model.service"), "{err}");

    let unstable =
        write("unstable.json", r#"{"target": "ssqs", "model": {"lambda": 3.0, "service": {"kind": "exponential", "rate": 2.0}}}"#);
    let out = run(&[s(&unstable), s(&dir.path().join("o2"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("computation failed"));

    let out = run(&[s(&dir.path().join("missing.json")), s(&dir.path().join("o3"))]);
    assert_eq!(out.status.code(), Some(1));

    // atoms off a coarse grid: the solved curve is visibly wrong
    let coarse = write(
        "coarse.json",
        r#"{"target": "random_sum",
            "law": {"coupling": "independent", "zeta": {"kind": "deterministic", "value": 0.7}, "q": 0.4},
            "grid": {"t_max": 20.0, "h": 1.0}, "sim": {"n": 2000, "seed": 3},
            "outputs": ["simulate", "compare"]}"#,
    );
    let out = run(&[s(&coarse), s(&dir.path().join("o4"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let cmp: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o4/comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["verdict"]["pass"], false);
}

#[test]
fn selftest_passes_and_is_reproducible() {
    let a = stopsum(&["selftest", "--seed", "5"]);
    let b = stopsum(&["selftest", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8_lossy(&a.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with('C') && l.contains("PASS")).count(), 10);
}
