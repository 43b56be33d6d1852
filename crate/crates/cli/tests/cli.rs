use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcp-gap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn compute_flat_value_in_bracket() {
    let v = json(&["compute", "--K", "0", "--N", "5", "--D", "1", "--n", "1024"]);
    let value = v["value"].as_f64().unwrap();
    let c = 25.0 / 16.0;
    assert!(value >= c / 4.0 && value <= PI * PI * c);
    assert_eq!(v["method"], "direct");
    for key in [
        "argmin",
        "K",
        "N",
        "D",
        "intro_lower_bound",
        "closed_form_bounds",
        "sturm_constant",
        "von_renesse_constant",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn compute_at_sphere_diameter_and_capping() {
    let at = json(&[
        "compute",
        "--K",
        "1",
        "--N",
        "2",
        "--D",
        "3.141592653589793",
        "--n",
        "512",
    ]);
    assert!(at["value"].as_f64().unwrap() <= 2.0);
    assert_eq!(at["model"]["value"].as_f64().unwrap(), 2.0);
    assert_eq!(at["sphere_eigenvalue"].as_f64().unwrap(), 2.0);
    let capped = run(&["compute", "--K", "1", "--N", "2", "--D", "10", "--n", "512"]);
    let exact = run(&[
        "compute",
        "--K",
        "1",
        "--N",
        "2",
        "--D",
        "3.141592653589793",
        "--n",
        "512",
    ]);
    assert_eq!(capped.stdout, exact.stdout);
    assert!(String::from_utf8_lossy(&capped.stderr).contains("D_{K,N}"));
}

#[test]
fn numbers_have_at_most_twelve_significant_digits() {
    let text = stdout(&["compute", "--K", "-1", "--N", "3", "--D", "2", "--n", "256"]);
    for token in text.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == '-')) {
        let mantissa = token.split('e').next().unwrap();
        let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
        let significant = digits.trim_start_matches('0').trim_end_matches('0');
        assert!(significant.len() <= 12, "{token}");
    }
}

#[test]
fn scan_outputs_and_verdicts() {
    let flat = stdout(&[
        "scan", "--K", "0", "--N", "3", "--D", "4", "--count", "16", "--n", "512",
    ]);
    let lines: Vec<&str> = flat.lines().collect();
    assert_eq!(lines[0], "D_prime,lambda,scaled,error");
    assert_eq!(lines.len(), 18);
    assert!(lines[17].starts_with("# ") && lines[17].contains("scaled: constant"));
    let scaled: Vec<f64> = lines[1..17]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(scaled
        .iter()
        .all(|s| (s - scaled[0]).abs() < 1e-6 * scaled[0]));

    let pos = stdout(&[
        "scan", "--K", "1", "--N", "13", "--count", "32", "--n", "512",
    ]);
    assert!(pos.lines().last().unwrap().contains("lambda: not monotone"));
    let neg = stdout(&[
        "scan", "--K", "-1", "--N", "2", "--D", "5", "--count", "16", "--n", "512",
    ]);
    assert!(neg
        .lines()
        .last()
        .unwrap()
        .contains("lambda: strictly decreasing"));

    let v = json(&[
        "scan", "--K", "-1", "--N", "2", "--D", "5", "--count", "8", "--n", "256", "--output",
        "json",
    ]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert_eq!(v["lambda_trend"], "strictly-decreasing");
}

#[test]
fn scan_needs_diameter_for_non_positive_curvature() {
    assert_eq!(
        run(&["scan", "--K", "0", "--N", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn validate_round_trip() {
    let dir = std::env::temp_dir().join(format!("mcp-gap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h.json");
    let p = path.to_str().unwrap();
    let v = json(&[
        "validate",
        "--K",
        "0",
        "--N",
        "3",
        "--D",
        "1",
        "--seed",
        "5",
        "--n",
        "256",
        "--density-out",
        p,
    ]);
    assert_eq!(v["validation"]["pass"], true);
    let gap = v["gap"]["lambda"].as_f64().unwrap();
    let model = v["model"]["value"].as_f64().unwrap();
    assert!(gap >= model * (1.0 - 1e-3));

    let again = json(&["validate", "--K", "0", "--N", "3", "--input", p]);
    assert_eq!(again["validation"], v["validation"]);
    // a smaller N is a stronger condition the density need not meet
    let strict = json(&["validate", "--K", "1", "--N", "1.2", "--input", p]);
    assert_eq!(strict["validation"]["pass"], false);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validate_rejects_malformed_input() {
    let out = Command::new(env!("CARGO_BIN_EXE_mcp-gap"))
        .args([
            "validate",
            "--K",
            "0",
            "--N",
            "3",
            "--input",
            "/nonexistent/h.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn bounds_bracket_model_value() {
    let b = json(&[
        "bounds",
        "--K",
        "1",
        "--N",
        "2",
        "--D",
        "1.5707963267948966",
        "--n",
        "1024",
    ]);
    let c = json(&[
        "compute",
        "--K",
        "1",
        "--N",
        "2",
        "--D",
        "1.5707963267948966",
        "--n",
        "1024",
    ]);
    let lambda = c["model"]["value"].as_f64().unwrap();
    for key in ["lambda", "muckenhoupt"] {
        assert!(b[key]["lower"].as_f64().unwrap() <= lambda, "{key}");
        assert!(b[key]["upper"].as_f64().unwrap() >= lambda, "{key}");
    }
    assert_eq!(b["muckenhoupt"]["provenance"], "muckenhoupt");
}

#[test]
fn input_errors_exit_two() {
    for args in [
        vec!["compute", "--K", "0", "--N", "0.5", "--D", "1"],
        vec!["compute", "--K", "0", "--N", "3", "--D", "-1"],
        vec!["compute", "--K", "0", "--N", "3", "--D", "1", "--n", "1001"],
        vec!["bounds", "--K", "0", "--N", "3"],
        vec!["selftest", "--n", "50"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn thread_variable_is_validated() {
    let bad = Command::new(env!("CARGO_BIN_EXE_mcp-gap"))
        .env("MCP_GAP_THREADS", "0")
        .args(["compute", "--K", "0", "--N", "3", "--D", "1", "--n", "64"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let one = Command::new(env!("CARGO_BIN_EXE_mcp-gap"))
        .env("MCP_GAP_THREADS", "1")
        .args(["compute", "--K", "1", "--N", "5", "--D", "3", "--n", "256"])
        .output()
        .unwrap();
    let many = run(&["compute", "--K", "1", "--N", "5", "--D", "3", "--n", "256"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn selftest_is_deterministic() {
    let a = run(&["selftest", "--n", "256", "--seed", "7"]);
    let b = run(&["selftest", "--n", "256", "--seed", "7"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
    assert!(text.ends_with("11/11 criteria passed\n"));
}
