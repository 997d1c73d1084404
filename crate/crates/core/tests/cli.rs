//! End-to-end tests of the command-line interface: report shapes, exit
//! codes, file round trips, and seed handling.

mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_buchi-eval"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn certify_ex1_alpha_at_gamma_one() {
    let out = run(&[
        "certify",
        "--model",
        "builtin:ex1",
        "--policy",
        "builtin:ex1-alpha",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
    ]);
    let report = stdout_json(&out);
    common::validate_report(&report).unwrap();
    let result = &report["result"];
    assert_eq!(result["unique"], Value::Bool(false));
    assert_eq!(result["null_space_dim"], 1);
    assert_eq!(
        result["value"]["values"],
        serde_json::json!([1.0, 1.0, 0.0])
    );
    assert_eq!(report["config"]["subcommand"], "certify");
    assert_eq!(report["tool"]["name"], "buchi-eval");
    assert_eq!(report["tool"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn evaluate_csv_has_fixed_columns_and_matches_the_solve() {
    let out = run(&[
        "evaluate",
        "--model",
        "builtin:ex1",
        "--policy",
        "builtin:ex1-alpha",
        "--gamma",
        "0.9",
        "--gamma-b",
        "0.45",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "state,id,class,value");
    assert_eq!(lines.len(), 4);

    // same solve through the library
    let model = buchi_eval::parse_model(buchi_eval::builtin::EX1).unwrap();
    let m = model.as_mdp().unwrap();
    let pol = buchi_eval::parse_policy(buchi_eval::builtin::EX1_POLICY_ALPHA, m).unwrap();
    let chain = buchi_eval::induce_chain(m, &pol).unwrap();
    let sys =
        buchi_eval::build_system(&chain, buchi_eval::SurrogateReward::new(0.9, 0.45).unwrap())
            .unwrap();
    let oracle = buchi_eval::solve_discounted(&sys).unwrap();

    for (s, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], s.to_string());
        assert_eq!(fields[1], m.states[s]);
        let value: f64 = fields[3].parse().unwrap();
        assert!((value - oracle.values[s]).abs() <= 1e-12);
    }
}

#[test]
fn evaluate_json_reports_residual_within_contract() {
    let out = run(&[
        "evaluate",
        "--model",
        "builtin:loop2",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
        "--method",
        "accepting",
    ]);
    let report = stdout_json(&out);
    common::validate_report(&report).unwrap();
    assert!(report["result"]["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(report["result"]["method"], "accepting");
    for row in report["result"]["values"].as_array().unwrap() {
        assert!((row["value"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn gen_random_is_bit_stable_and_certifiable() {
    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.json");
    let path_b = dir.path().join("b.json");
    let args_template = |path: &std::path::Path| {
        vec![
            "gen".to_string(),
            "random".to_string(),
            "--states".to_string(),
            "12".to_string(),
            "--seed".to_string(),
            "7".to_string(),
            "--rejecting-bsccs".to_string(),
            "2".to_string(),
            "--out".to_string(),
            path.to_string_lossy().into_owned(),
        ]
    };
    assert!(bin()
        .args(args_template(&path_a))
        .output()
        .unwrap()
        .status
        .success());
    assert!(bin()
        .args(args_template(&path_b))
        .output()
        .unwrap()
        .status
        .success());
    let doc_a = std::fs::read(&path_a).unwrap();
    let doc_b = std::fs::read(&path_b).unwrap();
    assert_eq!(doc_a, doc_b, "same seed must produce identical documents");

    // the generated document is a valid model
    buchi_eval::parse_model(std::str::from_utf8(&doc_a).unwrap()).unwrap();

    // and certification sees exactly the planted rejecting BSCCs
    let out = run(&[
        "certify",
        "--model",
        path_a.to_str().unwrap(),
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["result"]["null_space_dim"], 2);
    assert_eq!(report["result"]["rejecting_bscc_count"], 2);
}

#[test]
fn product_document_feeds_back_into_the_tool() {
    let dir = tempfile::tempdir().unwrap();
    let product_path = dir.path().join("product.json");
    let policy_path = dir.path().join("policy.json");

    let out = run(&[
        "product",
        "--mdp",
        "builtin:ex1",
        "--ldba",
        "builtin:gf-ldba",
        "--out",
        product_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let text = std::fs::read_to_string(&product_path).unwrap();
    let parsed = buchi_eval::parse_model(&text).unwrap();
    let product = parsed.as_mdp().unwrap();
    assert_eq!(product.num_states(), 6);
    assert_eq!(product.accepting.len(), 3);

    // a policy over the product; alpha wherever s1 is the MDP component
    let mut choice = serde_json::Map::new();
    for id in &product.states {
        let action = if id.starts_with("s1|") {
            "alpha"
        } else {
            "tau"
        };
        choice.insert(id.clone(), Value::String(action.to_string()));
    }
    std::fs::write(
        &policy_path,
        serde_json::json!({"kind": "policy", "choice": choice}).to_string(),
    )
    .unwrap();

    let out = run(&[
        "bscc",
        "--model",
        product_path.to_str().unwrap(),
        "--policy",
        policy_path.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    common::validate_report(&report).unwrap();
    assert_eq!(report["result"]["classes"]["s2|q1"], "B_A");
}

#[test]
fn mc_return_report_fields() {
    let out = run(&[
        "mc-return",
        "--model",
        "builtin:split",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
        "--state",
        "s0",
        "--samples",
        "4000",
        "--seed",
        "3",
    ]);
    let report = stdout_json(&out);
    common::validate_report(&report).unwrap();
    let r = &report["result"];
    assert!(r["mean"].is_f64());
    assert!(r["stderr"].is_f64());
    assert_eq!(r["samples"], 4000);
    assert_eq!(r["mode"], "bscc-aware");
}

#[test]
fn td_report_is_schema_valid() {
    let out = run(&[
        "td",
        "--model",
        "builtin:ex1",
        "--policy",
        "builtin:ex1-alpha",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
        "--episodes",
        "500",
        "--pin",
        "s3=0",
        "--seed",
        "1",
    ]);
    let report = stdout_json(&out);
    common::validate_report(&report).unwrap();
    assert_eq!(report["config"]["pin"], serde_json::json!(["s3=0"]));
    assert_eq!(
        report["result"]["error_trace"].as_array().unwrap().len(),
        500
    );
}

#[test]
fn demo_report_is_schema_valid() {
    let out = run(&["demo", "example1", "--spurious-c", "2", "--seed", "5"]);
    let report = stdout_json(&out);
    common::validate_report(&report).unwrap();
    let r = &report["result"];
    assert_eq!(r["greedy_with_spurious"], "beta");
    assert_eq!(r["greedy_with_constrained"], "alpha");
    assert_eq!(r["td_final_spurious_state"], 2.0);
}

#[test]
fn exit_code_two_on_input_errors() {
    let out = run(&[
        "certify",
        "--model",
        "/nonexistent/nope.json",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "certify",
        "--model",
        "builtin:nope",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // EX1 has an action choice at s1, so a policy is required
    let out = run(&["bscc", "--model", "builtin:ex1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_three_on_precondition_errors() {
    // discount ordering violated
    let out = run(&[
        "certify",
        "--model",
        "builtin:split",
        "--gamma",
        "0.5",
        "--gamma-b",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // accepting-chain solver on a chain with a rejecting BSCC
    let out = run(&[
        "evaluate",
        "--model",
        "builtin:ex1",
        "--policy",
        "builtin:ex1-alpha",
        "--gamma",
        "1",
        "--gamma-b",
        "0.5",
        "--method",
        "accepting",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // bscc-aware estimation needs gamma = 1
    let out = run(&[
        "mc-return",
        "--model",
        "builtin:split",
        "--gamma",
        "0.9",
        "--gamma-b",
        "0.5",
        "--state",
        "s0",
        "--samples",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_are_nonzero() {
    let out = run(&["evaluate", "--model", "builtin:split"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());

    let out = run(&["no-such-subcommand"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn seed_env_var_is_read_but_overridden_by_flag() {
    let out = bin()
        .args([
            "mc-return",
            "--model",
            "builtin:split",
            "--gamma",
            "1",
            "--gamma-b",
            "0.5",
            "--state",
            "s0",
            "--samples",
            "100",
        ])
        .env("BUCHI_EVAL_SEED", "42")
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert_eq!(report["config"]["seed"], 42);

    let out = bin()
        .args([
            "mc-return",
            "--model",
            "builtin:split",
            "--gamma",
            "1",
            "--gamma-b",
            "0.5",
            "--state",
            "s0",
            "--samples",
            "100",
            "--seed",
            "7",
        ])
        .env("BUCHI_EVAL_SEED", "42")
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert_eq!(report["config"]["seed"], 7);
}
