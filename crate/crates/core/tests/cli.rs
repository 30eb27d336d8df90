use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fock-ladder"));
    cmd.env_remove("FOCK_LADDER_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fock-ladder-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn params_for_half_transmittance() {
    let out = run(&["params", "--family", "lossy", "--eta", "0.5", "--N", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"alpha\":0.66666666666666663"));
    assert!(text.contains("\"beta\":0.33333333333333331"));
    assert!(text.contains("\"gamma\":0,"));
    assert!(text.contains("\"nu\":0.22222222222222221"));
    assert!(text.ends_with('\n'));
}

#[test]
fn out_of_domain_parameters_exit_with_usage_code() {
    let out = run(&["params", "--family", "amp", "--g", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`g`"));

    let out = run(&["params", "--family", "lossy", "--eta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pure_loss_grid_as_csv() {
    let out = run(&[
        "--format", "csv", "grid", "--family", "lossy", "--eta", "0.5", "--N", "0", "--imax", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("i,0,1,2,"));
    assert!(header.ends_with(",tail"));
    assert!(lines.nth(2).unwrap().starts_with("2,0.25,0.5,0.25,0"));
}

#[test]
fn identical_arguments_give_identical_bytes() {
    let cases: [&[&str]; 4] = [
        &["grid", "--family", "amp", "--g", "1.5", "--N", "0.5", "--imax", "6"],
        &["ladder", "--family", "noise", "--n", "1", "--imax", "8"],
        &[
            "mixture", "--family", "lossy", "--eta", "0.7", "--mode", "random", "--seed", "11",
        ],
        &[
            "--format", "csv", "entropy", "--family", "conj", "--g", "2", "--N", "0.3", "--imax", "5",
        ],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn majorize_reads_stdin_and_reports_through_exit_code() {
    let out = run_with_stdin(&["majorize"], r#"{"p":[1.0],"q":[0.5,0.5]}"#);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["relation"], "left_majorizes");

    let out = run_with_stdin(&["majorize"], r#"{"p":[0.5,0.5],"q":[1.0]}"#);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["relation"], "right_majorizes");

    let out = run_with_stdin(&["majorize"], r#"{"p":[0.2,0.8],"q":[0.8,0.2]}"#);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["relation"], "equivalent");

    let out = run_with_stdin(&["majorize", "--fock"], r#"{"p":[0.2,0.8],"q":[0.8,0.2]}"#);
    assert_eq!(out.status.code(), Some(1));

    let out = run_with_stdin(&["majorize"], r#"{"p":[0.7,0.7],"q":[1.0]}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ladder_and_entropy_pass_on_a_thermal_loss_channel() {
    let out = run(&[
        "ladder", "--family", "lossy", "--eta", "0.5", "--N", "1", "--imax", "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["pass"], true);
    assert_eq!(report["steps"].as_array().unwrap().len(), 12);

    let out = run(&[
        "entropy", "--family", "lossy", "--eta", "0.5", "--N", "1", "--imax", "12", "--order", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["measure"], "renyi(2)");
    assert_eq!(report["monotone"], true);
}

#[test]
fn dmat_is_column_stochastic_in_the_interior() {
    let out = run(&[
        "dmat", "--family", "amp", "--g", "1.2", "--N", "0.5", "--dim", "6", "--k", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["stochasticity"]["ok"], true);
    assert_eq!(report["k"], 2);
    let matrix = report["matrix"].as_array().unwrap();
    assert_eq!(matrix.len(), 6);
    let upper: f64 = matrix[0].as_array().unwrap()[1..]
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert_eq!(upper, 0.0);
}

#[test]
fn conjecture_reference_path() {
    let out = run(&[
        "conjecture",
        "--family",
        "lossy",
        "--eta",
        "0.6",
        "--N",
        "0.4",
        "--pattern",
        "101001",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for step in ["101001", "101010", "101100", "111000"] {
        assert!(text.contains(step), "{step} missing from {text}");
    }
}

#[test]
fn limit_converges_at_first_order() {
    let out = run(&["limit", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let routes = report["routes"].as_array().unwrap();
    assert_eq!(routes.len(), 2);
    for route in routes {
        for ratio in route["ratios"].as_array().unwrap() {
            let r = ratio.as_f64().unwrap();
            assert!((0.4..=0.6).contains(&r), "{r}");
        }
    }
}

#[test]
fn out_flag_writes_a_file_relative_to_the_output_directory() {
    let dir = scratch_dir("out");
    let args = ["--out", "params.json", "params", "--family", "noise", "--n", "1"];
    let out = bin().args(args).env("FOCK_LADDER_OUT_DIR", &dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(dir.join("params.json")).unwrap();
    let direct = run(&args[2..]);
    assert_eq!(written, direct.stdout);

    let absolute = dir.join("grid.csv");
    let out = run(&[
        "--format",
        "csv",
        "--out",
        absolute.to_str().unwrap(),
        "grid",
        "--family",
        "lossy",
        "--eta",
        "0.3",
        "--N",
        "0",
        "--imax",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&absolute).unwrap().starts_with("i,0,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn suite_subset_reports_each_criterion() {
    let out = run(&["suite", "--only", "1,5"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let outcomes = report.as_array().unwrap();
    let ids: Vec<u64> = outcomes.iter().map(|o| o["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [1, 5]);
    assert!(outcomes.iter().all(|o| o["pass"] == true));
}
