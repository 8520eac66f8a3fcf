//! End-to-end checks of the command-line interface: formats, round trips,
//! determinism and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperam"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn classify_genus1_example() {
    let out = run(&["classify", "--curve", "0,1,4", "--a", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["case"], "I-1");
    assert_eq!(doc["k_sq"].as_f64().unwrap(), -8.0);
    assert_eq!(doc["winding_pred"], 1);
}

#[test]
fn synth_writes_expected_curve() {
    let dir = std::env::temp_dir().join("hyperam_cli_synth");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c.json");
    let out = run(&[
        "synth",
        "--g",
        "2",
        "--ea",
        "-2",
        "--ratios",
        "1,0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let pts: Vec<f64> = doc["branch_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_f64().unwrap())
        .collect();
    assert_eq!(pts, vec![-2.0, -1.0, 2.0, -1.5, 6.0]);
}

#[test]
fn synth_round_trips_into_every_command() {
    let dir = std::env::temp_dir().join("hyperam_cli_roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c.json");
    let curve_file = path.to_str().unwrap();
    assert!(
        run(&["synth", "--g", "1", "--ea", "-2", "--ratios", "0.5", "--out", curve_file])
            .status
            .success()
    );
    for args in [
        vec!["classify", "--curve-file", curve_file],
        vec!["periods", "--curve-file", curve_file],
        vec!["winding", "--curve-file", curve_file],
        vec![
            "am",
            "--curve-file",
            curve_file,
            "--u-span",
            "0:3",
            "--samples",
            "50",
        ],
        vec![
            "shape",
            "--curve-file",
            curve_file,
            "--t1-span",
            "0:5",
            "--samples",
            "200",
        ],
        vec![
            "residual",
            "--curve-file",
            curve_file,
            "--kind",
            "smkdv",
            "--samples",
            "2000",
        ],
    ] {
        let out = run(&args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn shape_has_contracted_columns_and_rows() {
    let out = run(&[
        "shape",
        "--curve",
        "0,1,4",
        "--a",
        "1",
        "--t1-span",
        "0:20",
        "--samples",
        "2000",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t1,phi,re_z,im_z,abs_tangent");
    assert_eq!(lines.count(), 2000);
    for line in text.lines().skip(1).take(5) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        let abs_tangent: f64 = cols[4].parse().unwrap();
        assert!((abs_tangent - 1.0).abs() < 1e-10);
    }
}

#[test]
fn periods_header_matches_contract() {
    let out = run(&["periods", "--curve", "-4,-1,0", "--a", "3"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.starts_with("omega,re_omega_prime,im_omega_prime,re_tau,im_tau,case"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let re_tau: f64 = row[3].parse().unwrap();
    assert!(re_tau.abs() < 1e-10);
    assert_eq!(row[5], "I-2");
}

#[test]
fn identical_config_gives_identical_bytes() {
    let a = run(&["periods", "--curve", "0,1,4", "--a", "1"]);
    let b = run(&["periods", "--curve", "0,1,4", "--a", "1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reality_rejection_exits_2_with_report() {
    let out = run(&["classify", "--curve", "-2,-1,2,-1.5,5", "--a", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["passed"], false);
    assert!(doc["violations"][0]
        .as_str()
        .unwrap()
        .contains("no pairing"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ERROR"));
}

#[test]
fn usage_error_exits_64() {
    let out = run(&["classify", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["shape", "--curve", "0,1,4", "--t1-span", "5:1"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn config_file_alternative() {
    let dir = std::env::temp_dir().join("hyperam_cli_config");
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join("job.json");
    std::fs::write(
        &path,
        r#"{"command": "classify", "curve_list": "0,1,4", "a": 1}"#,
    )
    .unwrap();
    let out = run(&["--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["case"], "I-1");
}
