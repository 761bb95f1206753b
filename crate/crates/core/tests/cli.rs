use std::path::PathBuf;

use pdl::cli::{run, EXIT_BUDGET, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn pdl(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["pdl".to_string()];
    full.extend(args.iter().map(|a| {
        if a.ends_with(".pdl") {
            data(a)
        } else {
            a.to_string()
        }
    }));
    let out = run(full);
    let v = if out.stdout.is_empty() { Value::Null } else { serde_json::from_str(&out.stdout).expect("json report") };
    (out.code, v)
}

fn points(v: &Value) -> Vec<String> {
    v["results"]["points"].as_array().unwrap().iter().map(|p| p.as_str().unwrap().to_string()).collect()
}

#[test]
fn validate_files() {
    let (code, v) = pdl(&["validate", "id3.pdl"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["tool"], "pdl");
    assert_eq!(v["system_digest"].as_array().unwrap()[0].as_str().unwrap().len(), 64);
    let (code, v) = pdl(&["validate", "bad_triangle.pdl"]);
    assert_eq!(code, EXIT_FAIL);
    let w = &v["results"]["violations"][0];
    assert_eq!(w["axiom"], "triangle");
    assert_eq!(w["witness"].as_array().unwrap().len(), 3);
    let (code, v) = pdl(&["validate", "example512.pdl"]);
    assert_eq!(code, EXIT_PASS);
    assert!(v["results"]["points_checked"].as_u64().unwrap() >= 40);
}

#[test]
fn classify_examples() {
    let (code, v) = pdl(&["classify", "r12k3.pdl", "--variant", "minimal", "--c", "1/6"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(points(&v).len(), 12);
    let (_, v) = pdl(&["classify", "r12k3.pdl", "--variant", "uniform", "--c", "1/6"]);
    assert!(points(&v).is_empty());
    let (_, v) = pdl(&["classify", "id3.pdl", "--variant", "shadow", "--eps", "1/2", "--delta", "1/2"]);
    assert_eq!(points(&v), ["0", "1", "2"]);
    let (_, v) = pdl(&["classify", "r12k3.pdl", "--variant", "minimal", "--c", "1/6", "--probe", "0 3"]);
    assert_eq!(points(&v), ["0", "3"]);
    let (code, v) = pdl(&["classify", "shift2.pdl", "--variant", "mu-uniform", "--c", "1/2"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["results"]["measure_expansive"]["holds"], true);
    let (_, v) = pdl(&["classify", "shift2.pdl", "--variant", "expansive", "--c", "1/2", "--probe", "0~~0@0 01~~01@0"]);
    assert_eq!(points(&v).len(), 2);
}

#[test]
fn shadow_verdicts() {
    let (code, _) = pdl(&["shadow", "id3.pdl", "--x", "0", "--eps", "1/2", "--delta", "1/2", "--window", "3"]);
    assert_eq!(code, EXIT_PASS);
    let (code, v) = pdl(&["shadow", "id3.pdl", "--x", "0", "--eps", "1/2", "--delta", "2"]);
    assert_eq!(code, EXIT_FAIL);
    assert_eq!(v["results"]["points"][0]["exact"]["horizon"], 1);
}

#[test]
fn pipelines() {
    // A coarse eta admits shifted tracers; the least one is picked.
    let (code, v) = pdl(&["conjugacy", "r12k3.pdl", "r12k3.pdl", "--x", "1", "--eps", "1/2", "--delta", "1/2"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["results"]["conjugacy"]["residual"], "1/12");
    let (code, v) =
        pdl(&["conjugacy", "r12k3.pdl", "r12k3.pdl", "--x", "1", "--eps", "1/2", "--delta", "1/2", "--eta", "1/30"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["results"]["conjugacy"]["residual"], "0/1");
    for pair in v["results"]["table"].as_array().unwrap() {
        assert_eq!(pair[0], pair[1]);
    }
    let (code, v) = pdl(&["conjugacy", "twin4.pdl", "twin4_swap.pdl", "--x", "2", "--eps", "1", "--delta", "1/64", "--c", "1/2"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["results"]["conjugacy"]["eta"], "1/32");
    let (code, v) = pdl(&["conjugacy", "id3.pdl", "id3_swap12.pdl", "--x", "1", "--eps", "1/2", "--delta", "1/2"]);
    assert_eq!(code, EXIT_FAIL);
    assert_eq!(v["results"]["conjugacy"]["failure"]["step"], "perturbation");

    let (code, v) = pdl(&["hmap", "id3.pdl", "id3.pdl", "--x", "0", "--eta", "1/2"]);
    assert_eq!(code, EXIT_PASS);
    for img in v["results"]["h"]["images"].as_array().unwrap() {
        assert_eq!(img.as_array().unwrap().len(), 1);
    }

    let (code, v) = pdl(&["ghstable", "r12k3.pdl", "r12k3.pdl", "--x", "0", "--eps", "1/4", "--delta", "1/100"]);
    assert_eq!(code, EXIT_PASS);
    let pair = &v["results"]["candidates"][0]["pair"];
    assert_eq!(pair["i"]["value"], "0/1");
    assert_eq!(pair["j"]["value"], "0/1");

    let (code, _) = pdl(&["mustable", "id3_null.pdl", "id3_null.pdl", "--x", "0", "--eps", "1/2", "--delta", "1/2"]);
    assert_eq!(code, EXIT_PASS);
    let (code, v) = pdl(&["mustable", "id3.pdl", "id3.pdl", "--x", "0", "--eps", "1/2", "--delta", "1/2"]);
    assert_eq!(code, EXIT_FAIL);
    let failed: Vec<&str> = v["results"]["report"]["clauses"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["holds"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["null_images"]);
}

#[test]
fn gh_distance_and_budget() {
    let (code, v) = pdl(&["ghdist", "r12k1.pdl", "r12k5.pdl"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["results"]["upper"], "1/4");
    assert_eq!(v["results"]["lower"], "1/4");
    let (code, v) = pdl(&["ghdist", "r12k1.pdl", "r12k5.pdl", "--budget", "50"]);
    assert_eq!(code, EXIT_BUDGET);
    assert_eq!(v["status"], "budget");
    assert_eq!(v["results"]["complete"], false);
}

#[test]
fn example512_verb() {
    let (code, v) = pdl(&["example512", "example512.pdl"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["results"]["isolated"], true);
    let (code, _) = pdl(&["example512", "id3.pdl"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn usage_errors() {
    assert_eq!(pdl(&["classify", "r12k3.pdl", "--variant", "minimal", "--c", "x"]).0, EXIT_USAGE);
    assert_eq!(pdl(&["classify", "r12k3.pdl", "--variant", "minimal"]).0, EXIT_USAGE);
    assert_eq!(pdl(&["classify", "r12k3.pdl", "--variant", "sideways", "--c", "1"]).0, EXIT_USAGE);
    assert_eq!(pdl(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(pdl(&["validate", "missing.pdl"]).0, EXIT_USAGE);
    let out = run(["pdl", "--version"]);
    assert_eq!(out.code, EXIT_PASS);
    assert!(out.stdout.contains("pdl"));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["pdl", "shadow", &data("r12k1.pdl"), "--eps", "1/2", "--delta", "1/2"];
    let a = run(args);
    let b = run(args);
    assert_eq!(a.stdout, b.stdout);
    let args = ["pdl", "ghdist", &data("r12k1.pdl"), &data("r12k5.pdl")];
    assert_eq!(run(args).stdout, run(args).stdout);
    let timed = run(["pdl", "validate", &data("id3.pdl"), "--timing"]);
    assert!(timed.stdout.contains("timing_ms"));
    assert!(!run(["pdl", "validate", &data("id3.pdl")]).stdout.contains("timing_ms"));
}

#[test]
fn pretty_rendering() {
    let out = run(["pdl", "validate", &data("id3.pdl"), "--pretty"]);
    assert!(out.stdout.contains("status: pass"));
    assert!(serde_json::from_str::<Value>(&out.stdout).is_err());
}
