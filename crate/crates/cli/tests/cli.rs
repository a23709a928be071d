use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn adiabat(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabat"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn preset(dir: &Path) -> PathBuf {
    let out = adiabat(&["preset", "paper", "-o", "paper.json"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("paper.json")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn preset_then_solve_finds_101() {
    let dir = tempfile::tempdir().unwrap();
    preset(dir.path());
    let report = json(&adiabat(&["solve", "paper.json"], dir.path()));
    assert_eq!(report["argmax"], serde_json::json!(["101"]));
    assert_eq!(report["max_payoff"], 9.0);
    let payoffs: Vec<f64> = serde_json::from_value(report["payoffs"].clone()).unwrap();
    assert_eq!(payoffs, vec![0.0, 6.0, 7.0, 7.0, 5.0, 9.0, 8.0, 6.0]);
    let ends = |key: &str| {
        report[key]
            .as_array()
            .unwrap()
            .iter()
            .filter(|w| w["endpoint"] == "110")
            .count()
    };
    assert_eq!(ends("greedy_accept_equal"), 4);
    assert_eq!(ends("greedy_strict"), 3);
}

#[test]
fn preset_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = adiabat(&["preset", "paper"], dir.path());
    let b = adiabat(&["preset", "paper"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let cfg: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(cfg["schedule"]["reference_M"], 400);
    assert_eq!(cfg["schedule"]["g_scale"], 0.5887);
    assert_eq!(cfg["nmr"]["sign"], -1);
}

#[test]
fn solve_accepts_bare_graph() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("g.json"),
        r#"{"n": 2, "node_weights": [0, 0], "edges": [[0, 1, 1.5]]}"#,
    )
    .unwrap();
    let report = json(&adiabat(&["solve", "g.json"], dir.path()));
    assert_eq!(report["argmax"], serde_json::json!(["01", "10"]));
}

#[test]
fn gap_csv_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    preset(dir.path());
    let out = adiabat(&["gap", "paper.json", "--grid", "11", "--refine", "0"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,gap");
    assert_eq!(lines.len(), 12);
    let gap = |line: &str| line.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!((gap(lines[1]) - 2.0).abs() < 1e-9);
    assert!((gap(lines[11]) - 1.0).abs() < 1e-9);
}

#[test]
fn run_reports_target_population() {
    let dir = tempfile::tempdir().unwrap();
    preset(dir.path());
    let report = json(&adiabat(&["run", "paper.json", "--m", "100", "--trace"], dir.path()));
    assert_eq!(report["most_likely"], "101");
    let p = report["p_target"].as_f64().unwrap();
    assert!((p - 0.99840853426).abs() < 1e-9);
    assert_eq!(report["p_target_trace"].as_array().unwrap().len(), 101);
    let diag: Vec<f64> = serde_json::from_value(report["diagonal"].clone()).unwrap();
    assert!((diag.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let noisy = json(&adiabat(&["run", "paper.json", "--m", "60", "--mode", "noisy"], dir.path()));
    assert!(noisy["p_target"].as_f64().unwrap() < 0.98);
}

#[test]
fn compile_writes_schedule_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    preset(dir.path());
    let report = json(&adiabat(&["compile", "paper.json", "-o", "sched.json", "--m", "100"], dir.path()));
    let total = report["total_wall_clock_s"].as_f64().unwrap();
    assert!((total - 0.374).abs() / 0.374 < 0.05, "total {total}");
    assert!(report["verify_max_distance"].as_f64().unwrap() < 1e-6);

    let sched: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sched.json")).unwrap()).unwrap();
    assert_eq!(sched["sign"], -1);
    let slices = sched["slices"].as_array().unwrap();
    assert_eq!(slices.len(), 101);
    for key in ["alpha", "beta", "gamma", "delta"] {
        assert!(slices[100]["delays_s"][key].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn sweep_csv_header_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset(dir.path());
    let mut value: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    value["schedule"]["M_list"] = serde_json::json!([15, 30, 60, 100, 200, 400]);
    std::fs::write(dir.path().join("small.json"), value.to_string()).unwrap();

    for name in ["a.csv", "b.csv"] {
        let out = adiabat(&["sweep", "small.json", "-o", name], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("M,wall_clock_s,trace_distance,p_target,mode"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 18);
    let trotter: Vec<f64> = rows
        .iter()
        .filter(|r| r[4] == "trotter")
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert!(trotter.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*trotter.last().unwrap(), 0.0);

    let raw = adiabat(&["sweep", "small.json", "--raw-distance"], dir.path());
    assert!(raw.status.success());
    assert_ne!(raw.stdout, a.as_bytes());
}

#[test]
fn graph_file_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset(dir.path());
    let mut value: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    let graph = value.as_object_mut().unwrap().remove("graph").unwrap();
    value["graph_file"] = "inst/g.json".into();
    value["schedule"]["M_list"] = serde_json::json!([15]);
    value["schedule"]["reference_M"] = 30.into();
    std::fs::create_dir(dir.path().join("sub")).unwrap();
    std::fs::create_dir(dir.path().join("sub/inst")).unwrap();
    std::fs::write(dir.path().join("sub/inst/g.json"), graph.to_string()).unwrap();
    std::fs::write(dir.path().join("sub/cfg.json"), value.to_string()).unwrap();
    let out = adiabat(&["sweep", "sub/cfg.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset(dir.path());
    std::fs::write(dir.path().join("junk.json"), "{ not json").unwrap();
    let mut value: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    value["schedule"]["reference_M"] = 100.into();
    std::fs::write(dir.path().join("short_ref.json"), value.to_string()).unwrap();

    for args in [
        vec!["run", "missing.json"],
        vec!["run", "junk.json"],
        vec!["sweep", "short_ref.json"],
        vec!["solve", "junk.json"],
    ] {
        let out = adiabat(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn fit_t2_targets_sixty() {
    let dir = tempfile::tempdir().unwrap();
    preset(dir.path());
    let fit = json(&adiabat(&["fit-t2", "paper.json", "--t2-points", "21"], dir.path()));
    let m = fit["optimal_m"].as_u64().unwrap();
    assert!((40..=90).contains(&m));
}
