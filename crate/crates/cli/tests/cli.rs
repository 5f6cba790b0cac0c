use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ince(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ince"))
        .args(args)
        .env_remove("INCE_CATALOG")
        .output()
        .unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn tmp(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn verify_xii_passes() {
    let o = ince(&["verify", "Ince-XII", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let reports = v["reports"].as_array().unwrap();
    let checks: Vec<&str> = reports
        .iter()
        .map(|r| r["check"].as_str().unwrap())
        .collect();
    for c in [
        "transform",
        "hamiltonian-form",
        "first-integral",
        "symmetry:s0",
        "symmetry:s1",
        "symmetry:s2",
        "involution:s2",
    ] {
        assert!(checks.contains(&c), "{checks:?}");
    }
    assert!(reports.iter().all(|r| r["verdict"] == "PASS"));
    assert_eq!(v["summary"]["fail"], 0);
}

#[test]
fn resolve_x_prints_constraint() {
    let o = ince(&["resolve", "Ince-X", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("q'' = 6 q^2 - C1 t - C2"), "{s}");
}

#[test]
fn singularities_xv() {
    let o = ince(&["singularities", "Ince-XV", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["points"].as_array().unwrap().len(), 1);
    let ip = &v["index_points"][0];
    assert_eq!(ip["eigenvalues"], serde_json::json!(["-1", "-1/2"]));
    assert_eq!(ip["ratio"], "2");
}

#[test]
fn verify_all_is_deterministic() {
    let a = ince(&["verify", "--all", "--format", "json"]);
    let b = ince(&["verify", "--all", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["summary"]["fail"], 0);
    assert_eq!(v["summary"]["skipped"], 14);
}

#[test]
fn mutate_is_deterministic_per_seed() {
    let a = ince(&["mutate", "--count", "20", "--seed", "7", "--format", "json"]);
    let b = ince(&["mutate", "--count", "20", "--seed", "7", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["caught"], 20);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ince(&["verify", "Ince-99"]).status.code(), Some(2));
    assert_eq!(ince(&["verify"]).status.code(), Some(2));
    assert_eq!(ince(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        ince(&["integrate", "Ince-VII", "--from", "1", "--path", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ince(&["integrate", "Ince-VII", "--from", "1,x", "--path", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn catalog_errors_exit_3() {
    let bad = tmp("bad.toml", "[[entry]]\nid = \"a\"\node = \"u + * du\"\n");
    let o = Command::new(env!("CARGO_BIN_EXE_ince"))
        .args(["catalog"])
        .env("INCE_CATALOG", &bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = ince(&["catalog", "--catalog", "/nonexistent/ince.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn failing_check_exits_1() {
    // x' = H_y holds, y' has the wrong sign
    let doc = "[[entry]]\nid = \"h\"\nvars = [\"x\", \"y\"]\nsystem = [\"y\", \"x\"]\nhamiltonian = \"y^2/2 + x^2/2\"\n";
    let p = tmp("failing.toml", doc);
    let o = ince(&[
        "verify",
        "h",
        "--catalog",
        p.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert!(v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["verdict"] == "FAIL"));
}

#[test]
fn skipped_does_not_fail() {
    let o = ince(&["verify", "Ince-XIII", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["reports"][0]["verdict"], "SKIPPED");
}

#[test]
fn integrate_emits_json_lines() {
    let o = ince(&[
        "integrate",
        "Ince-VII",
        "--from",
        "-1,1",
        "--path",
        "2",
        "--tol",
        "1e-10",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    let recs: Vec<Value> = s
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs[0]["event"], "start");
    let last = recs.last().unwrap();
    assert_eq!(last["t_re"], 2.0);
    assert_eq!(last["chart"], 0);
    let x = last["coords"][0][0].as_f64().unwrap();
    assert!((x - 1.0).abs() < 1e-6);
    assert!(recs.iter().any(|r| r["chart"] != 0));
}

#[test]
fn integrate_complex_path_and_csv() {
    let csv = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("vii.csv");
    let o = ince(&[
        "integrate",
        "Ince-VII",
        "--from",
        "-1,1",
        "--path",
        "1+0.5i,2",
        "--dump-csv",
        csv.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t_re,t_im,chart"));
    assert!(text.lines().count() > 3);
}

#[test]
fn escape_exits_nonzero() {
    let o = ince(&[
        "integrate",
        "Ince-XXII",
        "--from",
        "0,1",
        "--path",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no chart"));
}

#[test]
fn roundtrip_and_catalog() {
    let o = ince(&["roundtrip", "Ince-X", "--samples", "50", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "PASS");
    let o = ince(&["catalog", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["entries"].as_array().unwrap().len(), 39);
}

#[test]
fn output_file() {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("xii.json");
    let o = ince(&["verify", "Ince-XII", "--output", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["summary"]["fail"], 0);
}
