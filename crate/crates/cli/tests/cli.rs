use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn optrack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optrack"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn weights(v: &Value, key: &str) -> Vec<f64> {
    serde_json::from_value(v[key].clone()).unwrap()
}

/// Two assets, percent cells, 24 months.
fn write_returns(dir: &Path, bad_row: Option<usize>) {
    let mut with = String::from("Average Value Weighted Returns -- Monthly\n,A,B\n");
    let mut ex = with.clone();
    for k in 0..24 {
        let date = 201001 + (k / 12) * 100 + k % 12;
        let a = 0.8 + ((k * 7) % 5) as f64 - 2.0;
        let b = 0.5 + ((k * 3) % 4) as f64 * 1.5 - 2.0;
        with.push_str(&format!("{date},{:.2},{:.2}\n", a + 0.2, b + 0.15));
        ex.push_str(&format!("{date},{a:.2},{b:.2}\n"));
    }
    if let Some(line) = bad_row {
        let mut lines: Vec<String> = with.lines().map(String::from).collect();
        lines[line - 1] = format!("{},1.0,abc", lines[line - 1].split(',').next().unwrap());
        with = lines.join("\n") + "\n";
    }
    fs::write(dir.join("with.csv"), with).unwrap();
    fs::write(dir.join("ex.csv"), ex).unwrap();
}

#[test]
fn estimate_writes_params_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_returns(dir.path(), None);
    ok(optrack(
        dir.path(),
        &["estimate", "--with-div", "with.csv", "--ex-div", "ex.csv", "-o", "out/params.json"],
    ));
    let params = optrack::MarketParams::from_json(&fs::read_to_string(dir.path().join("out/params.json")).unwrap())
        .unwrap();
    assert_eq!(params.n(), 2);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/estimation_report.json")).unwrap()).unwrap();
    assert_eq!(report["sample_size"], 24);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "estimate");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    write_returns(dir.path(), Some(17));
    let out = optrack(
        dir.path(),
        &["estimate", "--with-div", "with.csv", "--ex-div", "ex.csv", "-o", "params.json"],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 17"), "{err}");
    assert!(!dir.path().join("params.json").exists());
}

#[test]
fn pure_tracking_of_equal_values_gives_equal_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(optrack(
        dir.path(),
        &["allocate", "--zeta", "0,1,0", "--eta", "market", "--x", "1,1,1,1,1"],
    ));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for w in weights(&v, "weights") {
        assert!((w - 0.2).abs() < 1e-12, "{w}");
    }
}

#[test]
fn pure_outperformance_gives_gop() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(optrack(dir.path(), &["allocate", "--zeta", "1,0,0"]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for (a, b) in weights(&v, "weights").iter().zip(weights(&v, "gop")) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn all_zero_preferences_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = optrack(dir.path(), &["allocate", "--zeta", "0,0,0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    let out = optrack(dir.path(), &["allocate", "--zeta", "-1,1,1"]);
    assert!(!out.status.success());
}

#[test]
fn simulate_reports_each_listed_strategy() {
    let dir = tempfile::tempdir().unwrap();
    ok(optrack(
        dir.path(),
        &["simulate", "--strategies", "gop,mqp,market", "--paths", "8", "--steps", "50", "--out-dir", "run"],
    ));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run/metrics.json")).unwrap()).unwrap();
    assert_eq!(v["strategies"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(dir.path().join("run/metrics.csv")).unwrap();
    assert!(csv.starts_with("# config: "));
    assert_eq!(csv.lines().nth(1).unwrap(), "zeta0,zeta1,zeta2,strategy,metric,mean,sd");
}

#[test]
fn same_seed_gives_identical_csv_and_manifest_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "sweep", "--zeta0", "0.5", "--zeta1", "0.1,1", "--zeta2", "0.1", "--paths", "16", "--steps", "60",
            "--seed", "7", "--out-dir", out,
        ]
    };
    ok(optrack(dir.path(), &args("a")));
    ok(optrack(dir.path(), &args("b")));
    let a = fs::read(dir.path().join("a/metrics.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/metrics.csv")).unwrap());

    ok(optrack(dir.path(), &["sweep", "--config", "a/manifest.json", "--out-dir", "c"]));
    assert_eq!(a, fs::read(dir.path().join("c/metrics.csv")).unwrap());

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    let recorded = manifest["outputs"][0]["sha256"].as_str().unwrap();
    use sha2::Digest;
    assert_eq!(recorded, hex::encode(sha2::Sha256::digest(&a)));

    // A different seed changes the numbers.
    ok(optrack(
        dir.path(),
        &["sweep", "--config", "a/manifest.json", "--seed", "8", "--out-dir", "d"],
    ));
    assert_ne!(a, fs::read(dir.path().join("d/metrics.csv")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"strategies": "gop,market", "paths": 4, "steps": 20, "seed": 1, "out_dir": "from_file"}"#,
    )
    .unwrap();
    ok(optrack(dir.path(), &["simulate", "--config", "cfg.json", "--paths", "6", "--out-dir", "from_flag"]));
    assert!(!dir.path().join("from_file").exists());
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("from_flag/metrics.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["n_paths"], 6);
    assert_eq!(v["config"]["steps"], 20);
    assert_eq!(v["strategies"].as_array().unwrap().len(), 2);

    fs::write(dir.path().join("bad.json"), r#"{"pathz": 4}"#).unwrap();
    let out = optrack(dir.path(), &["simulate", "--config", "bad.json"]);
    assert!(!out.status.success());
}
