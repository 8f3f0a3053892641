use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hamjet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamjet")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn write_space(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn error_codes(bytes: &[u8]) -> Vec<String> {
    json(bytes)
        .as_array()
        .expect("error list")
        .iter()
        .map(|e| e["code"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn check_accepts_a_bundled_space() {
    let out = hamjet(&["check", "flat2x2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out.stdout);
    assert_eq!(doc["valid"], true);
    assert_eq!(doc["m"], 2);
    assert_eq!(doc["n"], 2);
}

#[test]
fn check_accepts_a_space_file() {
    let out = hamjet(&["check", concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/warped.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(json(&out.stdout)["space"], "warped");
}

#[test]
fn check_rejects_a_singular_metric() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_space(
        dir.path(),
        "singular",
        "dims = { m = 2, n = 2 }\nh = [[\"1\", \"0\"], [\"0\", \"1\"]]\ng_inv = [[\"1\", \"1\"], [\"1\", \"1\"]]\n",
    );
    let out = hamjet(&["check", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_codes(&out.stdout), ["singular_metric"]);
}

#[test]
fn check_requires_g_inv_for_multi_time() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_space(dir.path(), "nog", "dims = { m = 2, n = 2 }\nh = [[\"1\", \"0\"], [\"0\", \"1\"]]\n");
    let out = hamjet(&["check", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_codes(&out.stdout), ["missing_required_field"]);
}

#[test]
fn check_reports_unreadable_paths() {
    let out = hamjet(&["check", "/nonexistent/space.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_codes(&out.stdout), ["io_error"]);
}

#[test]
fn compute_gamma_on_the_sphere() {
    let out = hamjet(&["compute", "sphere2", "--object", "gamma", "--at", "x1=0.7", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out.stdout);
    let comps = doc["tensors"][0]["components"].as_array().unwrap();
    let value = |idx: [u64; 3]| {
        comps
            .iter()
            .find(|c| c["index"].as_array().unwrap().iter().map(|k| k.as_u64().unwrap()).eq(idx))
            .map(|c| c["value"].as_f64().unwrap())
            .unwrap()
    };
    let x: f64 = 0.7;
    assert!((value([1, 2, 2]) + x.sin() * x.cos()).abs() < 1e-14);
    assert!((value([2, 1, 2]) - x.cos() / x.sin()).abs() < 1e-14);
    assert_eq!(value([1, 1, 1]), 0.0);
}

#[test]
fn compute_em_on_flat_space_vanishes() {
    let out = hamjet(&["compute", "flat2x2", "--object", "em"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 8 + 16);
    assert!(lines.iter().all(|l| l.ends_with(" = 0")));
}

#[test]
fn compute_scalar_symbolically() {
    let out = hamjet(&["compute", "sphere2", "--object", "scalar", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out.stdout);
    assert_eq!(doc["scalars"]["R"], 2.0);
    assert_eq!(doc["scalars"]["Sc"], 2.0);
    assert_eq!(doc["scalars"]["chi"], 0.0);
}

#[test]
fn compute_rejects_unknown_objects() {
    let out = hamjet(&["compute", "flat2x2", "--object", "weyl"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_codes(&out.stderr), ["unknown_object"]);
}

#[test]
fn compute_warns_outside_the_domain() {
    let out = hamjet(&["compute", "sphere2", "--object", "gamma", "--at", "x1=2.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("outside the sampling domain"));
    assert!(stdout(&out).contains("Gamma"));
}

#[test]
fn list_objects_names_every_selector() {
    let out = hamjet(&["--list-objects"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = stdout(&out).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(
        names,
        ["chi", "gamma", "G", "N", "cartan", "torsion", "curvature", "ricci", "scalar", "deflection", "em", "einstein"]
    );
}

#[test]
fn verify_flat_space_passes_everything() {
    let out = hamjet(&["verify", "flat2x2", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out.stdout);
    assert_eq!(doc["suite"], "all");
    assert_eq!(doc["samples"], 20);
    assert!(doc["results"].as_array().unwrap().iter().all(|r| r["pass"] != false));
}

#[test]
fn verify_maxwell_on_sphere_with_potential() {
    let out = hamjet(&["verify", "sphere2_u", "--suite", "maxwell", "--seed", "7", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out.stdout);
    assert_eq!(doc["seed"], 7);
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for r in results {
        assert_eq!(r["pass"], true);
        assert!(r["max_abs_residual"].as_f64().unwrap() < 1e-8);
        let pt = &r["worst_point"];
        assert_eq!((pt["t"].as_array().unwrap().len(), pt["x"].as_array().unwrap().len()), (2, 2));
        assert_eq!(pt["p"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn verify_names_the_failing_identity() {
    let out = hamjet(&["verify", "corrupt_gamma", "--suite", "metricity", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out.stdout);
    let failed: Vec<&str> = doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["identity"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"g_ij|k = 0"), "{failed:?}");
    for name in failed {
        assert!(stderr(&out).contains(&format!("failed: {name}")));
    }
}

#[test]
fn verify_rejects_bad_configuration() {
    let out = hamjet(&["verify", "flat2x2", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_codes(&out.stderr), ["invalid_config"]);
    let out = hamjet(&["verify", "flat2x2", "--suite", "gauge"]);
    assert_eq!(error_codes(&out.stderr), ["unknown_suite"]);
    let out = hamjet(&["verify", "flat2x2", "--suite", "einstein", "--kappa", "0"]);
    assert_eq!(error_codes(&out.stderr), ["invalid_kappa"]);
}

#[test]
fn verify_is_byte_deterministic() {
    let args = ["verify", "timewarp", "--suite", "tables", "--seed", "3", "--samples", "25"];
    let a = hamjet(&args);
    let b = hamjet(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = hamjet(&["verify", "timewarp", "--suite", "tables", "--seed", "4", "--samples", "25"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn missing_command_is_an_input_error() {
    assert_eq!(hamjet(&[]).status.code(), Some(1));
    assert_eq!(hamjet(&["--help"]).status.code(), Some(0));
}
