use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_backcompat"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolved config"));
    String::from_utf8(out.stdout).unwrap()
}

/// Numbers on the line after the header.
fn row(stdout: &str, line: usize) -> Vec<f64> {
    stdout.lines().nth(line).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect()
}

const SMALL: [&str; 10] = ["--synthetic", "default", "--size", "1200", "--n1", "40", "--n2", "400", "--epochs", "150"];

#[test]
fn identical_models_are_fully_compatible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--size", "500", "--out", "d.csv"]);
    ok(d, &["train", "--data", "d.csv", "--epochs", "50", "--out", "m.json"]);
    let out = ok(d, &["compat", "--h1", "m.json", "--h2", "m.json", "--data", "d.csv"]);
    let header: Vec<&str> = out.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["ROC", "h1", "ROC", "h2", "C(h1,h2)"]);
    let values = row(&out, 1);
    assert_eq!(values[0], values[1]);
    assert_eq!(values[2], 1.0);
}

#[test]
fn undefined_compatibility_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("d.csv"), "x,label\n-2,0\n-1,0\n1,1\n2,1\n").unwrap();
    // predicts the opposite class everywhere
    std::fs::write(
        d.join("wrong.json"),
        r#"{"kind": "linear", "weights": [-5.0], "bias": 0.0, "feature_names": ["x"]}"#,
    )
    .unwrap();
    let out = run(d, &["compat", "--h1", "wrong.json", "--h2", "wrong.json", "--data", "d.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("undefined"));
}

#[test]
fn training_against_h1_reports_compatibility() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--size", "400", "--out", "d.csv"]);
    ok(d, &["train", "--data", "d.csv", "--epochs", "50", "--out", "h1.json"]);
    let out = ok(
        d,
        &["train", "--data", "d.csv", "--h1", "h1.json", "--kind", "strict-imitation", "--lambda", "1", "--classifier", "network", "--epochs", "50", "--out", "h2.json"],
    );
    assert!(out.contains("C(h1,h2)"));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("h2.json")).unwrap()).unwrap();
    assert_eq!(saved["kind"], "network");
    assert!(saved["standardization"]["means"].is_array());

    let missing = run(d, &["train", "--data", "d.csv", "--kind", "imitation", "--out", "x.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn default_sweep_writes_eleven_points() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut args = vec!["sweep", "--kind", "new-error", "--runs", "1", "--out", "curve.csv"];
    args.extend(SMALL);
    let out = ok(d, &args);
    assert_eq!(out.lines().count(), 12);
    let text = std::fs::read_to_string(d.join("curve.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("lambda_c,auc_h2,compatibility,seed,dataset,dissonance_kind\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn zero_grid_sweep_matches_update_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut sweep = vec!["sweep", "--grid", "0", "--runs", "3", "--seed", "4"];
    sweep.extend(SMALL);
    let mut exp = vec!["update-exp", "--kind", "new-error", "--runs", "3", "--seed", "4"];
    exp.extend(SMALL);
    let s = row(&ok(d, &sweep), 1);
    let e = row(&ok(d, &exp), 1);
    // sweep: lambda, auc h2, C, runs; update-exp: auc h1, auc h2, C, runs
    assert_eq!(&s[1..], &e[1..]);
    assert_eq!(std::fs::read_dir(d).unwrap().count(), 0, "no --out, no file");
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["update-exp", "--runs", "2", "--seed", "9"];
    args.extend(SMALL);
    assert_eq!(ok(dir.path(), &args), ok(dir.path(), &args));
    let sim = ["simulate", "--seeds", "5", "--seed", "3"];
    assert_eq!(ok(dir.path(), &sim), ok(dir.path(), &sim));
}

fn mean_scores(csv_text: &str) -> std::collections::HashMap<String, f64> {
    let mut sums: std::collections::HashMap<String, (f64, usize)> = Default::default();
    for line in csv_text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = sums.entry(f[0].to_string()).or_default();
        e.0 += f[3].parse::<f64>().unwrap();
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[test]
fn simulate_orders_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["simulate", "--update", "compatible,incompatible,none", "--player", "learner", "--seeds", "50", "--scores", "s.csv", "--out", "bins.csv"],
    );
    let means = mean_scores(&std::fs::read_to_string(d.join("s.csv")).unwrap());
    assert!(means["compatible"] > means["incompatible"]);
    assert!(means.contains_key("no-update"));
    let bins = std::fs::read_to_string(d.join("bins.csv")).unwrap();
    assert_eq!(bins.lines().count(), 1 + 3 * 15);
}

#[test]
fn naive_accept_breaks_even_without_an_update() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--update", "none,compatible", "--player", "naive-accept", "--seeds", "10", "--scores", "s.csv"]);
    let text = std::fs::read_to_string(d.join("s.csv")).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[4], "0.00", "pre-update phase is zero-EV: {line}");
        if f[0] == "no-update" {
            assert_eq!(f[3], "0.00");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(d, &["sweep", "--runs", "many"]).status.code(), Some(1));
    assert_eq!(run(d, &["update-exp"]).status.code(), Some(1));
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
    let missing = run(d, &["compat", "--h1", "a.json", "--h2", "b.json", "--data", "c.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("a.json"));
    let small = run(d, &["update-exp", "--synthetic", "default", "--size", "100", "--runs", "1"]);
    assert_eq!(small.status.code(), Some(2));
}

/// Start `serve`, read its echoed config, then stop it.
fn serve_config(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> serde_json::Value {
    let mut cmd = bin();
    cmd.current_dir(dir).arg("serve").args(args).stderr(Stdio::piped()).stdout(Stdio::null());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let echoed = lines.next().unwrap().unwrap();
    let serving = lines.next().unwrap().unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(serving.starts_with("serving"), "{serving}");
    let json = echoed.strip_prefix("resolved config: ").unwrap();
    serde_json::from_str::<serde_json::Value>(json).unwrap()["config"].clone()
}

#[test]
fn serve_flags_override_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let from_env = serve_config(d, &["--listen", "127.0.0.1:0"], &[("CAJA_DATA_DIR", "env-dir")]);
    assert_eq!(from_env["data_dir"], "env-dir");
    let from_flag = serve_config(
        d,
        &["--listen", "127.0.0.1:0", "--data-dir", "flag-dir"],
        &[("CAJA_DATA_DIR", "env-dir"), ("CAJA_LISTEN", "127.0.0.1:1")],
    );
    assert_eq!(from_flag["data_dir"], "flag-dir");
    assert_eq!(from_flag["listen"], "127.0.0.1:0");
    assert!(d.join("flag-dir").is_dir());
}
