//! End-to-end tests of the `yfwl` binary: flag validation, exit codes, CSV
//! ingestion failures, output formats, and determinism.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_yfwl"))
}

fn write_csv(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(text.as_bytes()).unwrap();
    path
}

fn exact_fit_csv(dir: &tempfile::TempDir) -> PathBuf {
    write_csv(dir, "exact.csv", "y,x\n2,1\n4,2\n6,3\n")
}

/// Deterministic dataset with one endogenous regressor and two instruments.
/// `with_labels` appends a non-numeric cluster column `g`.
fn iv_csv_impl(dir: &tempfile::TempDir, with_labels: bool) -> PathBuf {
    let mut text = String::from(if with_labels { "y,x1,w2,z1,z2,g\n" } else { "y,x1,w2,z1,z2\n" });
    for i in 0..60 {
        let t = i as f64;
        let x1 = (t * 0.7).sin();
        let z1 = (t * 1.3).cos();
        let z2 = ((t + 2.0) * 0.9).sin();
        let v = (t * 2.1).sin() * 0.8;
        let w2 = z1 + 0.8 * z2 + 0.4 * x1 + v;
        let eps = 0.6 * v + 0.3 * ((t + 1.0) * 1.7).cos();
        let y = 0.5 - 0.7 * x1 + 1.2 * w2 + eps;
        text += &format!("{y},{x1},{w2},{z1},{z2}");
        if with_labels {
            text += &format!(",g{}", i % 5);
        }
        text += "\n";
    }
    write_csv(dir, "iv.csv", &text)
}

fn iv_csv(dir: &tempfile::TempDir) -> PathBuf {
    iv_csv_impl(dir, false)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn exact_fit_recovers_the_slope() {
    let dir = tempfile::tempdir().unwrap();
    let csv = exact_fit_csv(&dir);
    let out = bin()
        .args(["--data"])
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--mode", "full", "--estimator", "ols", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["schema"], "yfwl-report/1");
    let coefs = v["fits"][0]["coefficients"].as_array().unwrap();
    let x = coefs.iter().find(|c| c["name"] == "x").unwrap();
    assert!((x["estimate"].as_f64().unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn header_only_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(&dir, "empty.csv", "y,x\n");
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "ols"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("no data rows"));
}

#[test]
fn duplicate_header_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(&dir, "dup.csv", "y,y\n1,2\n3,4\n");
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "ols"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("duplicate column"));
}

#[test]
fn parse_error_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(&dir, "bad.csv", "y,x\n1,2\n3,oops\n");
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "ols"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
}

#[test]
fn missing_values_reject_unless_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(&dir, "na.csv", "y,x\n1,2\n,3\n4,5\n6,7\n");
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "ols"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--drop-missing", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["diagnostics"]["dropped_rows"], 1);
}

#[test]
fn rank_deficient_design_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(&dir, "collinear.csv", "y,a,b\n1,1,2\n2,2,4\n3,3,6\n4,4,8\n");
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "a,b", "--estimator", "ols", "--no-intercept"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("rank-deficient"));
}

#[test]
fn inconsistent_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = exact_fit_csv(&dir);
    let cases: Vec<Vec<&str>> = vec![
        vec!["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--hac-lags", "3"],
        vec!["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--vcov", "cluster-cv1"],
        vec!["--outcome", "y", "--endogenous", "x", "--estimator", "kclass"],
        vec!["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--kappa", "0.5"],
        vec!["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--seed", "1"],
        vec!["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--tolerance", "-1"],
    ];
    for extra in cases {
        let out = bin().arg("--data").arg(&csv).args(&extra).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "args {extra:?}: {}", stderr(&out));
    }
    // unknown flag values are clap errors, also exit 2
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_mode_passes_and_flags_igmm_as_expected_failure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = iv_csv(&dir);
    let base = [
        "--outcome", "y", "--endogenous", "w2", "--exogenous", "x1",
        "--instruments", "z1,z2", "--mode", "compare", "--format", "json",
    ];

    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(base)
        .args(["--estimator", "2sls", "--vcov", "hc1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let cmp = &v["comparison"];
    assert_eq!(cmp["expected_failure"], false);
    assert_eq!(cmp["coef_pass"], true);
    assert_eq!(cmp["resid_pass"], true);
    assert_eq!(cmp["vcov_checks"][0]["pass"], true);
    assert_eq!(cmp["partition_case"]["tag"], "ApplicableEqual");

    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(base)
        .args(["--estimator", "igmm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "expected exit 0 for the demonstration");
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["comparison"]["expected_failure"], true);
}

#[test]
fn cluster_cv1_runs_with_a_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = iv_csv_impl(&dir, true);
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args([
            "--outcome", "y", "--endogenous", "w2", "--exogenous", "x1",
            "--instruments", "z1,z2", "--cluster", "g", "--mode", "compare",
            "--estimator", "2sls", "--vcov", "cluster-cv1", "--format", "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let check = &v["comparison"]["vcov_checks"][0];
    assert_eq!(check["kind"], "cluster-cv1");
    assert_eq!(check["pass"], true);
    assert!(check["df_factor"].as_f64().unwrap() < 1.0);
}

#[test]
fn table_mode_prints_standard_errors_when_vcov_requested() {
    let dir = tempfile::tempdir().unwrap();
    let csv = iv_csv(&dir);
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args([
            "--outcome", "y", "--endogenous", "w2", "--exogenous", "x1",
            "--instruments", "z1,z2", "--mode", "full", "--estimator", "2sls",
            "--vcov", "hc0",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("se"), "{text}");
    assert!(text.contains("const"));
    assert!(text.contains("w2"));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = iv_csv(&dir);
    let args = [
        "--outcome", "y", "--endogenous", "w2", "--exogenous", "x1",
        "--instruments", "z1,z2", "--mode", "compare", "--estimator", "liml",
        "--format", "json",
    ];
    let a = bin().arg("--data").arg(&csv).args(args).output().unwrap();
    let b = bin().arg("--data").arg(&csv).args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_reparses_and_matches_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = iv_csv(&dir);
    let base = [
        "--outcome", "y", "--endogenous", "w2", "--exogenous", "x1",
        "--instruments", "z1,z2", "--mode", "full", "--estimator", "2sls",
    ];
    let json_out = bin().arg("--data").arg(&csv).args(base).args(["--format", "json"]).output().unwrap();
    let table_out = bin().arg("--data").arg(&csv).args(base).output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    let table = stdout(&table_out);
    for coef in v["fits"][0]["coefficients"].as_array().unwrap() {
        // the table prints estimates with 10 decimals from the same values
        let printed = format!("{:.10}", coef["estimate"].as_f64().unwrap());
        assert!(table.contains(&printed), "table missing {printed}\n{table}");
    }
}

#[test]
fn sweep_mode_emits_the_size_grid() {
    let out = bin()
        .args(["--mode", "sweep", "--estimator", "fuller", "--seed", "5", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["sweep"]["rows"].as_array().unwrap();
    let sizes: Vec<u64> = rows.iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![50, 200, 1000, 5000]);
    let first = rows[0]["max_abs_coef_delta"].as_f64().unwrap();
    let last = rows[3]["max_abs_coef_delta"].as_f64().unwrap();
    assert!(last < first, "Fuller gap should shrink: {first:.3e} -> {last:.3e}");
}

#[test]
fn limitation_demo_without_data_uses_the_seeded_design() {
    let out = bin()
        .args(["--mode", "limitation-demo", "--seed", "2", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let demo = &v["limitation_demo"];
    assert!(demo["max_abs_delta_ols"].as_f64().unwrap() > 1e-3);
    assert!(demo["max_abs_delta_iv"].as_f64().unwrap() > 1e-3);
}

#[test]
fn no_intercept_drops_the_constant() {
    let dir = tempfile::tempdir().unwrap();
    let csv = exact_fit_csv(&dir);
    let out = bin()
        .arg("--data")
        .arg(&csv)
        .args(["--outcome", "y", "--endogenous", "x", "--estimator", "ols", "--no-intercept", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let coefs = v["fits"][0]["coefficients"].as_array().unwrap();
    assert_eq!(coefs.len(), 1);
    assert_eq!(coefs[0]["name"], "x");
    assert!((coefs[0]["estimate"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}
