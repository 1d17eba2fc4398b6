use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn gammasum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gammasum"))
        .args(args)
        .output()
        .unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gammasum"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn record(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exponential_median() {
    let out = gammasum(&[
        "gamma-sum",
        "--alphas",
        "1",
        "--lambdas",
        "1",
        "--x",
        "0.6931471806",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = record(&out);
    assert!((v["cdf"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    for key in [
        "command",
        "input_echo",
        "err_estimate",
        "converged",
        "r_used",
        "nodes_used",
        "warnings",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn chi_square_median() {
    let out = gammasum(&[
        "qform",
        "--sigma",
        "I2",
        "--c",
        "diag:1,1",
        "--x",
        "1.3862943611",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!((record(&out)["cdf"].as_f64().unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn selfcheck_passes() {
    let out = gammasum(&["selfcheck"]);
    assert_eq!(out.status.code(), Some(0));
    let v = record(&out);
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true), "{v}");
}

#[test]
fn validation_and_usage_errors() {
    let out = gammasum(&["gamma-sum", "--alphas", "1", "--lambdas", "0", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(record(&out)["error"]["kind"], "validation");
    assert_eq!(gammasum(&["gamma-sum", "--x", "1"]).status.code(), Some(2));
    assert_eq!(gammasum(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        gammasum(&["qform", "--sigma", "I2", "--c", "I3", "--x", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(gammasum(&["--help"]).status.code(), Some(0));
}

#[test]
fn non_convergence_exit_code() {
    let out = gammasum(&[
        "mvgamma",
        "--alpha",
        "1",
        "--sigma",
        "[[1,0.9],[0.9,1]]",
        "--xs",
        "1,1",
        "--n-max",
        "16",
        "--tol",
        "1e-14",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = record(&out);
    assert_eq!(v["converged"], false);
    assert!(v["cdf"].is_number());
}

#[test]
fn monte_carlo_is_deterministic() {
    let args = [
        "qform",
        "--sigma",
        "[[2,0.5],[0.5,1]]",
        "--c",
        "diag:1,3",
        "--x",
        "4",
        "--mc-samples",
        "50000",
        "--seed",
        "7",
    ];
    let a = gammasum(&args);
    let b = gammasum(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = record(&a);
    let mc = &v["monte_carlo"];
    let diff = (mc["estimate"].as_f64().unwrap() - v["cdf"].as_f64().unwrap()).abs();
    assert!(diff < 4.0 * mc["std_error"].as_f64().unwrap());
}

#[test]
fn batch_from_file_and_stdin() {
    let jobs = concat!(
        r#"{"command":"gamma-sum","params":{"alphas":[1,2],"lambdas":[1,3],"x":4}}"#,
        "\n",
        r#"{"command":"quantile","params":{"alphas":[1],"lambdas":[1],"p":0.5},"output_format":"plain"}"#,
        "\n",
        r#"{"command":"mvgamma","params":{"alpha":1.5,"sigma":"I2","xs":[1,2]},"quadrature":{"tol":1e-9}}"#,
        "\n",
        r#"{"command":"qform","params":{"sigma":"I2","c":"diag:1,-1","x":1}}"#,
        "\n",
    );
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(jobs.as_bytes()).unwrap();
    let from_file = gammasum(&["batch", file.path().to_str().unwrap()]);
    let from_stdin = with_stdin(&["batch"], jobs);
    assert_eq!(from_file.stdout, from_stdin.stdout);
    assert_eq!(from_file.status.code(), Some(2));
    let text = String::from_utf8(from_file.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("quantile quantile=0.693147180559945"));
    let last: Value = serde_json::from_str(lines[3]).unwrap();
    assert_eq!(last["error"]["kind"], "validation");
}

#[test]
fn batch_empty_and_missing_input() {
    let out = with_stdin(&["batch", "-"], "");
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(
        gammasum(&["batch", "/nonexistent/jobs.jsonl"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn batch_monotone_sweep() {
    let jobs: String = (1..=100)
        .map(|i| {
            format!(
                "{{\"command\":\"gamma-sum\",\"params\":{{\"alphas\":[0.5,1.5,2],\"lambdas\":[1,2,5],\"x\":{}}}}}\n",
                0.3 * i as f64
            )
        })
        .collect();
    let out = with_stdin(&["batch"], &jobs);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["cdf"]
                .as_f64()
                .unwrap()
        })
        .collect();
    assert_eq!(values.len(), 100);
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
}
