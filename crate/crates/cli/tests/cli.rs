use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geordd::simlab::{replication_rng, ComplianceLaw, FuzzyDgp, ScalarDgp, ScalarSetting};
use geordd::RddSample;
use geordd_cli::ingest::{ingest, write_csv, write_jsonl};
use serde_json::Value;
use tempfile::TempDir;

fn geordd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geordd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Setting I draw written as CSV; returns the path and the space flag.
fn setting_one_csv(dir: &Path, n: usize) -> (PathBuf, String) {
    let sample = ScalarDgp::new(ScalarSetting::I, n)
        .generate(&mut replication_rng(11, n, 0))
        .unwrap();
    let path = dir.join("setting1.csv");
    let arg = write_csv(&sample, File::create(&path).unwrap()).unwrap();
    (path, arg.to_string())
}

fn jsonl(dir: &Path, name: &str, sample: &RddSample) -> PathBuf {
    let path = dir.join(name);
    write_jsonl(sample, File::create(&path).unwrap()).unwrap();
    path
}

#[test]
fn sharp_with_fixed_bandwidth_recovers_unit_jump() {
    let dir = TempDir::new().unwrap();
    let (input, space) = setting_one_csv(dir.path(), 2000);
    let out = dir.path().join("out");
    let o = geordd(&[
        "sharp",
        "--input",
        path_str(&input),
        "--space",
        &space,
        "--bw",
        "0.3",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    let m = report["estimate"]["magnitude"].as_f64().unwrap();
    assert!((m - 1.0).abs() < 0.3, "magnitude {m}");
    assert_eq!(report["bandwidth"]["h0"].as_f64(), Some(0.3));
    for f in ["report.json", "fitted.csv", "bins.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("bandwidth_search.csv").exists());
    let written: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(written, report);
}

#[test]
fn auto_bandwidth_is_reported_and_within_bounds() {
    let dir = TempDir::new().unwrap();
    let (input, space) = setting_one_csv(dir.path(), 500);
    let out = dir.path().join("out");
    let o = geordd(&[
        "sharp",
        "--input",
        path_str(&input),
        "--space",
        &space,
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = &stdout_json(&o)["bandwidth"]["search"];
    let (lo, hi, b) = (
        s["b_min"].as_f64().unwrap(),
        s["b_max"].as_f64().unwrap(),
        s["b_star"].as_f64().unwrap(),
    );
    assert!(lo <= b && b <= hi);
    let table = fs::read_to_string(out.join("bandwidth_search.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("b,loss,skipped"));
    assert_eq!(table.lines().count(), 21);
}

#[test]
fn fuzzy_without_treatment_column_exits_1() {
    let dir = TempDir::new().unwrap();
    let (input, space) = setting_one_csv(dir.path(), 200);
    let o = geordd(&[
        "fuzzy",
        "--input",
        path_str(&input),
        "--space",
        &space,
        "--bw",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["code"], "missing_treatment");
    assert_eq!(e["error"]["exit_code"], 1);
}

#[test]
fn flat_compliance_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("flat.csv");
    let mut text = String::from("r,t,z,y\n");
    for i in 0..200 {
        let r = -1.0 + (i as f64 + 0.5) / 100.0;
        let z = u8::from(r >= 0.0);
        text.push_str(&format!("{r},1,{z},{}\n", r * 0.5));
    }
    fs::write(&path, text).unwrap();
    let o = geordd(&[
        "fuzzy",
        "--input",
        path_str(&path),
        "--space",
        "euclid",
        "--bw",
        "0.4",
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stderr_json(&o)["error"]["code"], "weak_compliance");
}

#[test]
fn thin_window_exits_2() {
    let dir = TempDir::new().unwrap();
    let (input, space) = setting_one_csv(dir.path(), 200);
    let o = geordd(&[
        "sharp",
        "--input",
        path_str(&input),
        "--space",
        &space,
        "--bw",
        "0.0001",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["exit_code"], 2);
}

#[test]
fn fuzzy_jsonl_wasserstein_runs() {
    let dir = TempDir::new().unwrap();
    let dgp = FuzzyDgp::wasserstein(
        ComplianceLaw::TwoSided {
            low: 0.2,
            high: 0.8,
        },
        2000,
    );
    let sample = dgp.generate(&mut replication_rng(5, 2000, 0)).unwrap();
    let input = jsonl(dir.path(), "w.jsonl", &sample);
    let o = geordd(&["fuzzy", "--input", path_str(&input), "--bw", "0.4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    assert_eq!(report["variant"], "embedding");
    assert!(report["estimate"].is_object());
}

#[test]
fn geodesic_variant_needs_side() {
    let dir = TempDir::new().unwrap();
    let dgp = FuzzyDgp::wasserstein(ComplianceLaw::AlwaysTakers { share: 0.3 }, 300);
    let sample = dgp.generate(&mut replication_rng(5, 300, 0)).unwrap();
    let input = jsonl(dir.path(), "w.jsonl", &sample);
    let o = geordd(&[
        "fuzzy",
        "--input",
        path_str(&input),
        "--fuzzy-variant",
        "geodesic",
        "--bw",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "invalid_config");
}

#[test]
fn simulate_writes_campaign_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let o = geordd(&[
        "simulate",
        "--setting",
        "network",
        "--reps",
        "10",
        "--sizes",
        "100,200",
        "--seed",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("campaign.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("setting,n,rep,bandwidth,bias,fail_flag")
    );
    assert_eq!(csv.lines().count(), 21);
    let rate: Value =
        serde_json::from_str(&fs::read_to_string(out.join("rate.json")).unwrap()).unwrap();
    assert!(rate["slope"].as_f64().unwrap().is_finite());
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["rng"], "chacha8-stream");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = geordd(&[
            "simulate",
            "--setting",
            "IV",
            "--reps",
            "10",
            "--sizes",
            "200",
            "--seed",
            "9",
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (o.stdout, fs::read(out.join("campaign.csv")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let (input, space) = setting_one_csv(dir.path(), 500);
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "input = {:?}\nspace = {space:?}\nbw = \"0.2\"\n",
            path_str(&input)
        ),
    )
    .unwrap();
    let from_file = geordd(&["sharp", "--config", path_str(&cfg)]);
    assert!(
        from_file.status.success(),
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    assert_eq!(
        stdout_json(&from_file)["bandwidth"]["h0"].as_f64(),
        Some(0.2)
    );

    let overridden = geordd(&["sharp", "--config", path_str(&cfg), "--bw", "0.35,0.4"]);
    let report = stdout_json(&overridden);
    assert_eq!(report["bandwidth"]["h0"].as_f64(), Some(0.35));
    assert_eq!(report["bandwidth"]["h1"].as_f64(), Some(0.4));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "bandwith = \"auto\"\n").unwrap();
    let o = geordd(&["sharp", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "invalid_config");
}

#[test]
fn usage_errors_and_help() {
    let o = geordd(&["sharp", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "usage");
    let h = geordd(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&h.stdout).contains("simulate"));
}

#[test]
fn validate_counts_rows_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let dgp = FuzzyDgp::sphere(ComplianceLaw::NeverTakers { share: 0.25 }, 300);
    let sample = dgp.generate(&mut replication_rng(2, 300, 0)).unwrap();
    let csv_path = dir.path().join("s.csv");
    let arg = write_csv(&sample, File::create(&csv_path).unwrap()).unwrap();
    let back = ingest(&csv_path, Some(arg), 0.0).unwrap();
    assert_eq!(back, sample);

    let o = geordd(&[
        "validate",
        "--input",
        path_str(&csv_path),
        "--space",
        &arg.to_string(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["n"], 300);
    assert_eq!(v["treatment"], true);
    assert_eq!(v["assignment"], true);
    assert_eq!(v["sharp_consistent"], false);
}

#[test]
fn bad_cell_reports_row_and_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "r,y\n0.1,1\n0.2,oops\n").unwrap();
    let o = geordd(&["validate", "--input", path_str(&path), "--space", "euclid"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["code"], "parse_error");
    let msg = e["error"]["message"].as_str().unwrap();
    assert!(msg.contains("row 2") && msg.contains('y'), "{msg}");
}
