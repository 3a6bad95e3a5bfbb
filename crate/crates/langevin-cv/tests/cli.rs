//! End-to-end tests of the `langevin-cv` binary: exit codes, file formats,
//! and the sample → fit → estimate pipeline.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_langevin-cv"))
}

#[test]
fn experiment_smoke_run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "experiment",
            "mixture1d",
            "--samples",
            "2000",
            "--burn-in",
            "200",
            "--replicas",
            "2",
            "--algorithms",
            "ula",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("algorithm,function,method,basis,"));
    assert_eq!(csv.lines().count(), 4); // header + plain/ZV/CV
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(json["config"]["preset"], "mixture1d");
    assert!(json["timestamp"].is_u64());
    assert!(dir.path().join("autocov_ula.csv").exists());
    assert!(dir.path().join("oracle_report.json").exists());
}

#[test]
fn config_file_plus_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    // start from the preset default, shrink it, store as a config file
    let cfg = serde_json::json!({
        "preset": "gaussian_sanity",
        "algorithms": ["mala"],
        "gamma_ula": 0.01,
        "gamma_mala": 0.1,
        "gamma_rwm": 0.05,
        "burn_in": 100,
        "samples": 1000,
        "replicas": 2,
        "seed": 5,
        "basis": "first",
        "data": null,
        "label_column": "y",
        "intercept": false,
        "split_fit": false,
        "output_dir": dir.path().join("ignored"),
    });
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let out_dir = dir.path().join("actual");
    let out = bin()
        .args(["experiment", "gaussian_sanity", "--config"])
        .arg(&cfg_path)
        .args(["--replicas", "3", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    // flag overrides beat the config file
    assert_eq!(json["config"]["replicas"], 3);
    assert_eq!(json["config"]["samples"], 1000);
}

#[test]
fn exit_code_2_on_config_error() {
    let out = bin()
        .args(["experiment", "mixture1d", "--samples", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["experiment", "mixture1d", "--basis", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_3_on_missing_data() {
    let out = bin()
        .args([
            "experiment",
            "logistic",
            "--data",
            "/nonexistent/data.csv",
            "--samples",
            "1000",
            "--burn-in",
            "100",
            "--replicas",
            "1",
            "--algorithms",
            "ula",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_code_4_on_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "experiment",
            "mixture1d",
            "--algorithms",
            "ula",
            "--gamma",
            "50",
            "--samples",
            "5000",
            "--burn-in",
            "0",
            "--replicas",
            "1",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("diverged"), "stderr: {msg}");
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn sample_fit_estimate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(bin()
        .args([
            "sample",
            "--target",
            "mixture1d",
            "--algorithm",
            "mala",
            "--gamma",
            "0.05",
            "--burn-in",
            "500",
            "--samples",
            "5000",
            "--seed",
            "11",
            "--out",
        ])
        .arg(dir.path()));
    let chain_csv = dir.path().join("chain.csv");
    let body = std::fs::read_to_string(&chain_csv).unwrap();
    assert_eq!(body.lines().next().unwrap(), "x1");
    assert_eq!(body.lines().count(), 5001);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("chain_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["length"], 5000);

    run_ok(bin()
        .args(["fit", "--target", "mixture1d", "--chain"])
        .arg(&chain_csv)
        .args([
            "--basis",
            "gaussian:4:-4:4",
            "--function",
            "cubic_sine",
            "--method",
            "both",
            "--out",
        ])
        .arg(dir.path()));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap())
            .unwrap();
    assert_eq!(fit["cv"]["theta"].as_array().unwrap().len(), 4);
    assert_eq!(fit["zv"]["theta"].as_array().unwrap().len(), 4);

    let stdout = run_ok(bin()
        .args(["estimate", "--target", "mixture1d", "--chain"])
        .arg(&chain_csv)
        .arg("--fit")
        .arg(dir.path().join("fit.json"))
        .arg("--out")
        .arg(dir.path()));
    let est: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("estimate.json")).unwrap(),
    )
    .unwrap();
    assert!(est["plain"].is_f64());
    assert!(est["cv"].is_f64());
    assert!(est["zv"].is_f64());
    // π(f) = 0 by symmetry; CV estimate should sit closer than 1
    assert!(est["cv"].as_f64().unwrap().abs() < 1.0);
    assert!(stdout.contains("plain"));
}

#[test]
fn oracle_subcommand_emits_report_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(bin()
        .args([
            "oracle1d",
            "--target",
            "mixture1d",
            "--basis",
            "gaussian:5:-4:4",
            "--function",
            "cubic_sine",
            "--boundary",
            "5",
            "--out",
        ])
        .arg(dir.path()));
    assert!(stdout.contains("sigma2_f=92.45"), "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("oracle_report.json")).unwrap(),
    )
    .unwrap();
    assert!((report["sigma2_f"].as_f64().unwrap() - 92.45).abs() < 0.05);

    run_ok(bin()
        .args([
            "oracle1d",
            "--target",
            "mixture1d",
            "--basis",
            "gaussian:5:-4:4",
            "--function",
            "cubic_sine",
            "--sweep",
            "3,5",
            "--out",
        ])
        .arg(dir.path()));
    let table = std::fs::read_to_string(dir.path().join("truncation_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(Path::new(&dir.path().join("oracle_reports.json")).exists());
}

#[test]
fn csv_dataset_flows_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.csv");
    // tiny separable dataset
    let mut body = String::from("a,b,y\n");
    for i in 0..20 {
        let x = (i as f64 - 10.0) / 5.0;
        let y = i32::from(x + 0.3 * ((i * 7) % 3) as f64 > 0.0);
        body.push_str(&format!("{x},{},{y}\n", -x * 0.5));
    }
    std::fs::write(&data_path, body).unwrap();
    let out_dir = dir.path().join("out");
    run_ok(bin()
        .args(["experiment", "logistic", "--data"])
        .arg(&data_path)
        .args([
            "--label-column",
            "y",
            "--intercept",
            "--samples",
            "2000",
            "--burn-in",
            "200",
            "--replicas",
            "1",
            "--algorithms",
            "mala",
            "--out",
        ])
        .arg(&out_dir));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    // intercept makes d=3: 6 functions × 5 methods + header
    assert_eq!(csv.lines().count(), 31);
}
