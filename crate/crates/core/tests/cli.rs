//! Black-box checks of the command-line interface: output formats, exit
//! codes, and spot values through the full binary.

use std::process::{Command, Output};

use serde_json::Value;

fn igdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igdiff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = igdiff(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout_csv(args: &[&str]) -> Vec<Vec<String>> {
    let out = igdiff(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.ends_with('\n'), "output ends with a newline");
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fit_symmetric_pair_reports_closed_form_values() {
    let v = stdout_json(&["fit", "3", "3", "3", "3"]);
    let alpha = v["alpha"].as_f64().unwrap();
    let delta = v["delta"].as_f64().unwrap();
    assert!((alpha - 9.0 / 5f64.sqrt()).abs() < 1e-12 * alpha);
    assert!((delta - 2.0 / 5f64.sqrt()).abs() < 1e-12 * delta);
    assert_eq!(v["beta"].as_f64().unwrap(), 0.0);
    assert_eq!(v["mu"].as_f64().unwrap(), 0.0);
    assert_eq!(v["use_case_detected"].as_u64(), Some(1));
    assert!(v["ratio_c"].is_null());
    assert!((v["moments"]["variance"].as_f64().unwrap() - 2.0 / 9.0).abs() < 1e-14);
}

#[test]
fn fit_detects_equal_rate_ratio() {
    let v = stdout_json(&["fit", "1", "2", "2", "4"]);
    assert_eq!(v["use_case_detected"].as_u64(), Some(2));
    assert!((v["ratio_c"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["beta"].as_f64().unwrap() - 2.4).abs() < 1e-9);
    let w = stdout_json(&["fit", "1", "2", "2", "5"]);
    assert!(w["use_case_detected"].is_null());
}

#[test]
fn curve_density_is_symmetric_for_equal_pairs() {
    let rows = stdout_csv(&[
        "curve", "pdf", "exact", "--a1", "3", "--b1", "3", "--a2", "3", "--b2", "3", "--z",
        "-2:2:0.5",
    ]);
    assert_eq!(rows[0], vec!["z", "value", "log10_value"]);
    assert_eq!(rows.len(), 1 + 9);
    let val = |i: usize| rows[i][1].parse::<f64>().unwrap();
    for k in 0..4 {
        let left = val(1 + k);
        let right = val(9 - k);
        assert!(
            ((left - right) / right).abs() < 1e-8,
            "z = {}: {left} vs {right}",
            rows[1 + k][0]
        );
    }
}

#[test]
fn curve_grid_endpoints_are_inclusive() {
    let rows = stdout_csv(&[
        "curve",
        "tail",
        "asymptotic",
        "--a1",
        "1",
        "--b1",
        "1",
        "--a2",
        "1",
        "--b2",
        "1",
        "--z",
        "0:1:0.25",
    ]);
    let zs: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(zs, vec!["0.0", "0.25", "0.5", "0.75", "1.0"]);
}

#[test]
fn deep_tail_cells_keep_log_and_drop_linear_value() {
    let rows = stdout_csv(&[
        "curve",
        "tail",
        "asymptotic",
        "--a1",
        "30",
        "--b1",
        "30",
        "--a2",
        "30",
        "--b2",
        "30",
        "--z",
        "20:20:1",
    ]);
    assert_eq!(rows.len(), 2);
    assert!(rows[1][1].is_empty(), "linear cell should be empty");
    let log10: f64 = rows[1][2].parse().unwrap();
    assert!(log10 < -1000.0, "log10 = {log10}");

    let v = stdout_json(&[
        "curve",
        "tail",
        "asymptotic",
        "--a1",
        "30",
        "--b1",
        "30",
        "--a2",
        "30",
        "--b2",
        "30",
        "--z",
        "20:20:1",
        "--format",
        "json",
    ]);
    assert!(v[0]["value"].is_null());
    assert!(v[0]["log10_value"].as_f64().unwrap() < -1000.0);
}

#[test]
fn tail_methods_agree_where_they_should() {
    let exact = stdout_csv(&[
        "curve", "tail", "exact", "--a1", "3", "--b1", "3", "--a2", "3", "--b2", "3", "--z",
        "2:2:1",
    ]);
    let got: f64 = exact[1][1].parse().unwrap();
    let want = 2.724_512_428_482_898_6e-4;
    assert!(
        ((got - want) / want).abs() < 1e-9,
        "exact tail at 2: {got}"
    );
}

#[test]
fn crossover_reports_probability() {
    let v = stdout_json(&[
        "crossover", "--a1", "3", "--b1", "3", "--a2", "3", "--b2", "3", "--t", "2",
    ]);
    let p = v["probability"].as_f64().unwrap();
    let want = 2.724_512_428_482_898_6e-4;
    assert!(((p - want) / want).abs() < 1e-9);
    assert!((v["log10_probability"].as_f64().unwrap() - p.log10()).abs() < 1e-12);
    assert_eq!(v["method"], "exact");
}

#[test]
fn kl_report_is_small_and_two_sided() {
    let v = stdout_json(&["kl", "--a1", "3", "--b1", "3", "--a2", "3", "--b2", "3"]);
    let fwd = v["kl_exact_nig"].as_f64().unwrap();
    let rev = v["kl_nig_exact"].as_f64().unwrap();
    assert!(fwd > 1e-5 && fwd < 1e-4, "forward KL {fwd}");
    assert!(rev > 1e-5 && rev < 1e-4, "reverse KL {rev}");
    let w = v["window"].as_array().unwrap();
    assert!(w[0].as_f64().unwrap() < 0.0 && w[1].as_f64().unwrap() > 0.0);
}

#[test]
fn sample_emits_header_and_parseable_rows() {
    let rows = stdout_csv(&[
        "sample", "--a1", "2", "--b1", "3", "--a2", "5", "--b2", "4", "--n", "64", "--seed", "9",
    ]);
    assert_eq!(rows[0], vec!["z"]);
    assert_eq!(rows.len(), 65);
    for r in &rows[1..] {
        r[0].parse::<f64>().unwrap();
    }
}

#[test]
fn usage_and_domain_errors_exit_two() {
    // comparison formula outside its parameter family
    let out = igdiff(&[
        "curve", "tail", "soa", "--a1", "3", "--b1", "3", "--a2", "4", "--b2", "4",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // density has no asymptotic variant
    let out = igdiff(&[
        "curve", "pdf", "asymptotic", "--a1", "3", "--b1", "3", "--a2", "3", "--b2", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // malformed grid
    let out = igdiff(&[
        "curve", "tail", "exact", "--a1", "3", "--b1", "3", "--a2", "3", "--b2", "3", "--z",
        "1:0:0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // invalid distribution parameters
    let out = igdiff(&["fit", "-1", "3", "3", "3"]);
    assert_eq!(out.status.code(), Some(2));

    // clap-level usage error
    let out = igdiff(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_suites_exit_zero_and_report_all_checks() {
    let v = stdout_json(&["validate", "convolution"]);
    assert_eq!(v["pass"], Value::Bool(true));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    for c in checks {
        assert_eq!(c["pass"], Value::Bool(true), "{}", c["name"]);
    }

    let v = stdout_json(&["validate", "theorem1"]);
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn out_flag_writes_file_and_manifest() {
    let dir = std::env::temp_dir().join(format!("igcli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fit.json");
    let out = igdiff(&[
        "fit",
        "2",
        "2",
        "4",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "file output should not echo to stdout");

    let body: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(body["use_case_detected"].as_u64(), Some(2));

    let manifest: Value = serde_json::from_slice(
        &std::fs::read(dir.join("fit.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["params"]["a1"].as_f64(), Some(2.0));
    let sha = manifest["outputs"]["fit.json"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
    assert!(sha.chars().all(|c| c.is_ascii_hexdigit()));
    std::fs::remove_dir_all(&dir).ok();
}
