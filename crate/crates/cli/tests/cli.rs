use std::path::PathBuf;
use std::process::{Command, Output};

fn steinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steinlab"))
        .args(args)
        .env_remove("STEINLAB_TOL")
        .output()
        .unwrap()
}

fn write_temp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("steinlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_passes_on_the_flip() {
    let spec = write_temp(
        "flip.json",
        r#"{
            "label": "flip",
            "algebra": {"multimatrix": {"blocks": [[1, 0.5], [1, 0.5]]}},
            "group": {"cyclic": 2},
            "action": {"generators": [{"element": 1, "block_permutation": [1, 0]}]},
            "checks": ["schreier_dim_der", "index_scaling"]
        }"#,
    );
    let out = steinlab(&["run", spec.to_str().unwrap(), "--format", "json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = report["experiments"][0]["rows"].as_array().unwrap();
    let schreier = rows
        .iter()
        .find(|r| r["name"] == "schreier_dim_der")
        .unwrap();
    assert_eq!(schreier["status"], "pass");
    assert_eq!(schreier["lhs_rational"], "3/4");
    assert!(rows.iter().all(|r| r.get("elapsed_ms").is_none()));
}

#[test]
fn mismatched_dimensions_are_rejected_with_exit_code_two() {
    let spec = write_temp(
        "bad.json",
        r#"{
            "algebra": {"multimatrix": {"blocks": [[1, 0.5], [1, 0.5]]}},
            "group": {"cyclic": 2},
            "action": {"matrices": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]], [[1, 0, 0], [0, 1, 0], [0, 0, 1]]]}
        }"#,
    );
    let out = steinlab(&["run", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("action"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_fields_are_rejected() {
    let spec = write_temp(
        "typo.json",
        r#"{"algebra": {"multimatrix": {"blocks": [[1, 1.0]]}}, "chekcs": ["all"]}"#,
    );
    let out = steinlab(&["run", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn a_too_tight_tolerance_reports_failure_with_exit_code_one() {
    let spec = write_temp(
        "tight.json",
        r#"{"algebra": {"group_algebra": "S3"}, "checks": ["lemma_group_algebra_dim"]}"#,
    );
    let out = steinlab(&[
        "run",
        spec.to_str().unwrap(),
        "--tolerance",
        "1e-30",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().next().unwrap().contains("status"));
    assert!(csv.contains("fail"));
}

#[test]
fn dim_prints_the_derivation_dimension() {
    let alg = write_temp(
        "m2c.json",
        r#"{"multimatrix": {"blocks": [[2, 0.75], [1, 0.25]]}}"#,
    );
    let out = steinlab(&["dim", alg.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rational"], "51/64");
    assert_eq!(v["dim"], 5);
}

#[test]
fn corpus_list_is_valid_json() {
    let out = steinlab(&["corpus", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 20);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let spec = write_temp(
        "c.json",
        r#"{"algebra": {"multimatrix": {"blocks": [[1, 1.0]]}}, "checks": ["validate"]}"#,
    );
    let target = spec.with_file_name("c-report.md");
    let out = steinlab(&[
        "run",
        spec.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(target)
        .unwrap()
        .contains("validate"));
}
