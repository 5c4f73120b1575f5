use std::process::{Command, Output};

use serde_json::Value;

fn densecode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densecode"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn info_maximal_channel() {
    let v = json(&densecode(&[
        "info",
        "--p",
        "3",
        "--q",
        "2",
        "--alphas-sq",
        "0.5,0.5",
        "0.5,0.5",
    ]));
    assert!((v["average_information"].as_f64().unwrap() - 5.169925).abs() < 1e-6);
    assert_eq!(v["classical_cost"].as_f64().unwrap(), 2.0);
    let counts: Vec<u64> = v["branch_rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["message_count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, vec![36, 18, 18, 9]);
}

#[test]
fn info_running_example() {
    let v = json(&densecode(&[
        "info",
        "--p",
        "3",
        "--q",
        "2",
        "--alphas-sq",
        "0.2,0.8",
        "0.4,0.6",
    ]));
    let probs: Vec<f64> = v["branch_rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["probability"].as_f64().unwrap())
        .collect();
    for (got, want) in probs.iter().zip([0.32, 0.08, 0.48, 0.12]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!((v["average_information"].as_f64().unwrap() - 4.369925).abs() < 1e-6);
}

#[test]
fn info_rejects_p_not_above_q() {
    let out = densecode(&["info", "--p", "2", "--q", "3", "--alphas-sq", "0.3,0.3,0.4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires p > q"));
}

#[test]
fn raw_coefficients_and_pair_broadcast() {
    let h = std::f64::consts::FRAC_1_SQRT_2.to_string();
    let list = format!("{h},{h}");
    let v = json(&densecode(&["info", "--pairs", "3", "--alphas", &list]));
    let expected = 3.0 * 6f64.log2();
    assert!((v["average_information"].as_f64().unwrap() - expected).abs() < 1e-12);
    let out = densecode(&["info", "--pairs", "3", "--alphas-sq", "0.5,0.5", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"p": 3, "q": 2, "alphas_sq": [[0.2, 0.8], [0.4, 0.6]], "format": "json"}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&densecode(&["info", "--config", cfg]));
    assert!((v["average_information"].as_f64().unwrap() - 4.369925).abs() < 1e-6);
    let v = json(&densecode(&[
        "info",
        "--config",
        cfg,
        "--alphas-sq",
        "0.5,0.5",
        "0.5,0.5",
    ]));
    assert!((v["average_information"].as_f64().unwrap() - 36f64.log2()).abs() < 1e-12);

    std::fs::write(dir.path().join("bad.json"), r#"{"p": 3, "bogus": 1}"#).unwrap();
    let bad = dir.path().join("bad.json");
    assert_eq!(
        densecode(&["info", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn simulate_running_example() {
    let args = [
        "simulate",
        "--trials",
        "10000",
        "--seed",
        "7",
        "--alphas-sq",
        "0.2,0.8",
        "0.4,0.6",
    ];
    let first = densecode(&args);
    let v = json(&first);
    assert_eq!(v["success_rate"].as_f64().unwrap(), 1.0);
    for b in v["branches"].as_array().unwrap() {
        let f = b["frequency"].as_f64().unwrap();
        let p = b["probability"].as_f64().unwrap();
        let sd = b["std_dev"].as_f64().unwrap();
        assert!((f - p).abs() <= 3.0 * sd, "{b}");
    }
    // byte-identical on rerun
    assert_eq!(densecode(&args).stdout, first.stdout);
}

#[test]
fn simulate_single_trial_maximal() {
    let v = json(&densecode(&["simulate", "--trials", "1", "--seed", "0"]));
    assert_eq!(v["success_rate"].as_f64().unwrap(), 1.0);
    assert_eq!(v["branches"][0]["branch"], serde_json::json!([0, 0]));
    assert_eq!(v["branches"][0]["count"].as_u64().unwrap(), 1);
}

#[test]
fn simulate_strict_message_out_of_range() {
    let out = densecode(&[
        "simulate",
        "--trials",
        "50",
        "--message",
        "30",
        "--strict",
        "--alphas-sq",
        "0.2,0.8",
        "0.4,0.6",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let ok = densecode(&[
        "simulate",
        "--trials",
        "50",
        "--message",
        "30",
        "--alphas-sq",
        "0.2,0.8",
        "0.4,0.6",
    ]);
    assert!(ok.status.success());
}

#[test]
fn surface_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.csv");
    let out = densecode(&["surface", "--steps", "10", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha01_sq,alpha02_sq,i_ave");
    assert_eq!(lines.len(), 10 * 10 + 1);
    assert!(lines
        .iter()
        .any(|l| l.starts_with("0.5,0.5,5.169925001442")));
    assert!(lines
        .iter()
        .any(|l| l.starts_with("0.2,0.4,4.369925001442")));
}

#[test]
fn surface_unwritable_path() {
    let out = densecode(&["surface", "--steps", "4", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_default_passes() {
    let out = densecode(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("[FAIL]"));
    assert!(text.contains("9 matrices reproduced entrywise"));
}

#[test]
fn verify_uniform_phase_divisor_is_flagged() {
    let out = densecode(&["verify", "--phase-divisor", "q", "--p", "5", "--q", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[FAIL] orthogonality with phase divisor q"));
    assert!(text.contains("magnitude 0.5"));
}

#[test]
fn verify_three_by_two() {
    let out = densecode(&["verify", "--p", "3", "--q", "2", "--format", "json"]);
    let v = json(&out);
    let matrices = v
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().starts_with("reference 3x3"))
        .unwrap();
    assert_eq!(matrices["passed"], Value::Bool(true));
}
