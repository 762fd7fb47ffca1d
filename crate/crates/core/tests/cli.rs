use std::path::Path;
use std::process::{Command, Output};

use wellposed::harness::registry;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wellposed")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn out_dir(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn simulate_writes_the_trajectory_table_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (out_dir(tmp.path(), "a"), out_dir(tmp.path(), "b"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", "ou-scalar", "--paths", "12", "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = std::fs::read(Path::new(&a).join("trajectories.csv")).unwrap();
    let csv_b = std::fs::read(Path::new(&b).join("trajectories.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path_id,t,component,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows.len(), 8 * 101);
    assert_eq!(rows[0], ["0", "0", "0", "0"]);
    assert_eq!(rows.last().unwrap()[..2], ["7", "1"]);
}

#[test]
fn missing_seed_is_a_schema_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let text = registry::builtin_text("controllability-2mode").unwrap().replace("seed = 2\n", "");
    let cfg = write_config(tmp.path(), "noseed.toml", &text);
    let o = run(&["simulate", "--config", &cfg, "--out", &out_dir(tmp.path(), "o")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn unknown_keys_are_schema_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let text = registry::builtin_text("transport-shift").unwrap().replacen("seed = 3\n", "seed = 3\nmystery = 1\n", 1);
    let cfg = write_config(tmp.path(), "extra.toml", &text);
    assert_eq!(code(&run(&["verify", "--config", &cfg, "--out", &out_dir(tmp.path(), "o")])), 2);
}

#[test]
fn zero_tolerance_makes_the_check_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let text = registry::builtin_text("controllability-2mode")
        .unwrap()
        .replace("name = \"controllability-gramian\"", "name = \"controllability-gramian\"\ntolerance = 0.0");
    let cfg = write_config(tmp.path(), "tampered.toml", &text);
    let out = out_dir(tmp.path(), "o");
    let o = run(&["verify", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
    let report = std::fs::read_to_string(Path::new(&out).join("report.json")).unwrap();
    assert!(report.contains("\"FAIL\""));
}

#[test]
fn short_yosida_ladder_is_inconclusive_not_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
name = "short-ladder"
kind = "linear"
seed = 1
[numerics]
dt = 0.5
horizon = 1.0
paths = 1
[generator]
kind = "heat"
modes = 64
[[checks]]
name = "yosida-domain"
samples = 6
"#;
    let cfg = write_config(tmp.path(), "ladder.toml", text);
    let out = out_dir(tmp.path(), "o");
    let o = run(&["verify", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("INCONCLUSIVE"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out).join("report.json")).unwrap()).unwrap();
    let verdicts: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["verdict"].as_str().unwrap()).collect();
    assert!(verdicts.contains(&"INCONCLUSIVE") && verdicts.contains(&"PASS"));
}

#[test]
fn blow_up_is_a_numeric_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
name = "unstable"
kind = "semilinear"
seed = 1
[numerics]
dt = 0.01
horizon = 1.0
paths = 2
[generator]
kind = "diagonal"
eigenvalues = [300.0]
[observation]
kind = "identity"
[initial]
kind = "fixed"
values = [1.0]
[semilinear]
lipschitz = 0.1
tau = 1.0
"#;
    let cfg = write_config(tmp.path(), "unstable.toml", text);
    let o = run(&["simulate", "--config", &cfg, "--out", &out_dir(tmp.path(), "o")]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn estimate_tabulates_constants_and_marks_the_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "est");
    let o = run(&["estimate", "--config", "semilinear-tanh-obs", "--paths", "40", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(Path::new(&out).join("constants.csv")).unwrap();
    let det: f64 = table
        .lines()
        .find_map(|l| l.strip_prefix("delta_det,"))
        .expect("delta_det row")
        .parse()
        .unwrap();
    // Slowest mode of diag(-1, -2) under C = I on [0, 1].
    let oracle = ((1.0 - (-4.0f64).exp()) / 4.0).sqrt();
    assert!((det - oracle).abs() < 1e-6, "{det} vs {oracle}");
    assert!((oracle - 0.495400).abs() < 1e-6);
    let svg = std::fs::read_to_string(Path::new(&out).join("sweep.svg")).unwrap();
    assert!(svg.contains("id=\"theta-marker\""));
}

#[test]
fn estimate_with_an_empty_sweep_is_a_schema_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let text = registry::builtin_text("semilinear-tanh-obs").unwrap();
    let start = text.find("sweep = ").unwrap();
    let end = start + text[start..].find('\n').unwrap();
    let text = format!("{}sweep = []{}", &text[..start], &text[end..]);
    let cfg = write_config(tmp.path(), "nosweep.toml", &text);
    let o = run(&["estimate", "--config", &cfg, "--out", &out_dir(tmp.path(), "o")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_reports_are_byte_identical_across_reruns_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, threads) in ["1", "2", "1"].iter().enumerate() {
        let out = out_dir(tmp.path(), &format!("r{i}"));
        let o = run(&["verify", "--config", "delay-stochastic", "--threads", threads, "--out", &out]);
        assert_eq!(code(&o), 0);
        reports.push(std::fs::read(Path::new(&out).join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn partial_runs_are_marked_missing_and_report_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    for s in ["controllability-2mode", "transport-shift"] {
        let out = runs.join(s);
        assert_eq!(code(&run(&["verify", "--config", s, "--out", out.to_str().unwrap()])), 0);
    }
    let runs_s = runs.to_str().unwrap();
    let o = run(&["report", "--config", runs_s]);
    assert_eq!(code(&o), 1);
    let first = std::fs::read(runs.join("report.md")).unwrap();
    let md = String::from_utf8(first.clone()).unwrap();
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && l[2..].starts_with(char::is_numeric)).collect();
    assert_eq!(rows.len(), 16, "{md}");
    assert!(md.contains("| 11 | Controllability Gramian | PASS"));
    assert_eq!(md.matches("MISSING").count(), 15);
    assert!(runs.join("summary.svg").is_file());
    run(&["report", "--config", runs_s]);
    assert_eq!(std::fs::read(runs.join("report.md")).unwrap(), first);
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(code(&run(&[])), 2);
}
