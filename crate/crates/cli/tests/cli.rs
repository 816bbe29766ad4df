use std::path::PathBuf;
use std::process::{Command, Output};

use bpmf_cli::verify::{default_tree_solver, run_check, Suite};
use bpmf_core::exact_oracle::exact_marginals;
use bpmf_core::factor_graph::spec::load_graph;
use bpmf_core::message_passing::{BeliefState, VarBelief};
use bpmf_core::{BpMfPartition, FactorGraph};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn graph(name: &str) -> String {
    root().join("graphs").join(name).display().to_string()
}

fn bpmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpmf")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bpmf-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn infer_on_a_tree_matches_enumeration() {
    let out = bpmf(&["infer", "--config", &graph("tree.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["schedule"], "exact");
    assert_eq!(json["termination"], "converged");

    let loaded = load_graph(&std::fs::read_to_string(graph("tree.json")).unwrap()).unwrap();
    let exact = exact_marginals(&loaded.graph).unwrap();
    let beliefs = json["beliefs"].as_array().unwrap();
    assert_eq!(beliefs.len(), exact.vars.len());
    for (b, want) in beliefs.iter().zip(&exact.vars) {
        let got: Vec<f64> = serde_json::from_value(b["probs"].clone()).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-10, "{}: {g} vs {w}", b["name"]);
        }
    }
    // Bethe free energy equals -ln Z on a tree.
    let f = json["free_energy"].as_f64().unwrap();
    assert!((f + exact.log_z).abs() < 1e-9, "{f} vs {}", -exact.log_z);
}

#[test]
fn infer_writes_beliefs_and_trace_into_out_dir() {
    let dir = scratch("infer-out");
    let out = bpmf(&["infer", "--config", &graph("mixed.json"), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let beliefs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("beliefs.json")).unwrap()).unwrap();
    let h = beliefs["beliefs"].as_array().unwrap().iter().find(|b| b["name"] == "h").unwrap();
    assert_eq!(h["mean"].as_array().unwrap().len(), 2);
    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(trace.lines().count() >= 2);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn contradictory_evidence_exits_with_3() {
    let out = bpmf(&["infer", "--config", &graph("contradiction.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contradiction"));
}

#[test]
fn cycle_is_refused_without_loopy_and_runs_with_it() {
    let out = bpmf(&["infer", "--config", &graph("cycle.json")]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x0") && err.contains("p20"), "witness missing: {err}");

    let out = bpmf(&["infer", "--config", &graph("cycle.json"), "--loopy"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["schedule"], "loopy");
}

#[test]
fn iteration_budget_exhaustion_exits_with_2() {
    let out = bpmf(&["infer", "--config", &graph("cycle.json"), "--loopy", "--max-outer", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_reports_location_and_exits_with_1() {
    let dir = scratch("parse");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"variables\": [\n    {\"name\": \"a\", \"card\": }\n  ]\n}\n").unwrap();
    let out = bpmf(&["infer", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&bad, r#"{"variables": [{"name": "a", "card": 2}], "factors": [{"name": "f", "scope": ["b"], "table": [1, 1]}]}"#).unwrap();
    let out = bpmf(&["infer", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('b'));
    std::fs::remove_dir_all(dir).unwrap();

    assert_eq!(bpmf(&["infer"]).status.code(), Some(1));
    assert_eq!(bpmf(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bpmf(&["--help"]).status.code(), Some(0));
}

#[test]
fn ofdm_ber_is_reproducible_and_validates_receivers() {
    let desk = root().join("scenarios/desk.json").display().to_string();
    let args = ["ofdm-ber", "--config", &desk, "--trials", "2", "--snr", "4,10", "--jobs", "2"];
    let a = bpmf(&args);
    let b = bpmf(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("snr_db,receiver,trials,bit_errors,ber,mean_outer_iters"));
    assert_eq!(text.lines().count(), 1 + 2 * 3);

    let out = bpmf(&["ofdm-ber", "--config", &desk, "--receivers", "bp-mf,oracle"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quick_verify_passes() {
    let out = bpmf(&["verify", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

/// Correct tree beliefs pushed through `softmax(-ln b)`.
fn inverted_solver(graph: &FactorGraph, partition: &BpMfPartition) -> bpmf_core::Result<BeliefState> {
    let mut state = default_tree_solver(graph, partition)?;
    for b in &mut state.vars {
        if let VarBelief::Discrete(p) = b {
            let w: Vec<f64> = p.iter().map(|&x| 1.0 / x.max(1e-300)).collect();
            let s: f64 = w.iter().sum();
            *p = w.into_iter().map(|x| x / s).collect();
        }
    }
    Ok(state)
}

#[test]
fn suite_detects_a_broken_tree_solver() {
    let mut suite = Suite::new(1);
    suite.instances = 10;
    let good = run_check(&suite, "1").unwrap();
    assert!(good.passed(), "{}", good.line());
    suite.tree_solver = inverted_solver;
    let bad = run_check(&suite, "1").unwrap();
    assert!(!bad.passed());
    assert!(bad.line().starts_with("[FAIL] 1 tree-exactness"), "{}", bad.line());
}
