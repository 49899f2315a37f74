//! End-to-end tests of the `geoconvex` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geoconvex"));
    c.env("GEOCONVEX_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const SQUARE: &str = r#"{
  "manifold": "line",
  "functions": {"f": "x^2"},
  "checks": [{"name": "sq", "kind": "phi_convex_interval", "f": "f", "phi": "diff", "interval": [0, 1], "expect": "pass"}]
}"#;

const HELIX: &str = r#"{
  "manifold": "cylinder",
  "functions": {"cube": "h1^3"},
  "regions": {"full": [[-3, 3], "circle"], "upper": [[0, 3], "circle"]},
  "checks": [
    {"name": "full", "kind": "geodesic_phi_convex", "f": "cube", "phi": "diff", "region": "full", "expect": "pass"},
    {"name": "upper", "kind": "geodesic_phi_convex", "f": "cube", "phi": "diff", "region": "upper", "expect": "pass"},
    {"name": "interval", "kind": "phi_convex_interval", "f": "cube", "phi": "diff", "interval": [-2, 0], "expect": "violated"}
  ]
}"#;

#[test]
fn passing_config_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sq.json", SQUARE);
    let out = run(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["overall"], "ok");
    assert_eq!(r["checks"][0]["report"]["status"], "pass-on-samples");
}

#[test]
fn unexpected_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "helix.json", HELIX);
    let out = run(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["overall"], "mismatch");
    assert_eq!(r["checks"][0]["report"]["status"], "violated");
    assert_eq!(r["checks"][0]["matched"], false);
    assert_eq!(r["checks"][1]["matched"], true);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write(dir.path(), "bad.json", "{\"checks\": [");
    assert_eq!(run(&["check", "--config", &malformed]).status.code(), Some(2));
    let undefined = write(dir.path(), "undef.json", &SQUARE.replace("\"f\": \"f\"", "\"f\": \"g\""));
    let out = run(&["check", "--config", &undefined]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("undefined function `g`"));
    let unknown = write(dir.path(), "kind.json", &SQUARE.replace("phi_convex_interval", "phi_concave"));
    assert_eq!(run(&["check", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(run(&["check", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(run(&["check"]).status.code(), Some(2));
}

#[test]
fn falsify_reports_refinement_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "helix.json", HELIX);
    let out = run(&["falsify", "interval", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rep = &r["checks"][0]["report"];
    assert!(rep["violation"]["margin"].as_f64().unwrap() >= 3.0);
    let hist: Vec<f64> = rep["margin_history"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(hist.len(), 4);
    assert!(hist.windows(2).all(|w| w[1] >= w[0]));

    let out = run(&["falsify", "upper", "--config", &cfg]);
    let rep = &json(&out)["checks"][0]["report"];
    assert!(rep["violation"].is_null());
    assert!(rep["margin_history"].as_array().unwrap().iter().all(|m| m.as_f64().unwrap() <= 1e-9));

    assert_eq!(run(&["falsify", "missing", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn probe_tabulates_all_six_properties() {
    let verdicts = |phi: &str| -> Vec<(String, String)> {
        let r = json(&run(&["probe", phi]));
        r["checks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c["probe"]["property"].as_str().unwrap().to_string(), c["probe"]["verdict"].as_str().unwrap().to_string()))
            .collect()
    };
    let diff = verdicts("diff");
    assert_eq!(diff.len(), 6);
    let get = |v: &[(String, String)], p: &str| v.iter().find(|(k, _)| k == p).unwrap().1.clone();
    for p in ["nonneg_homogeneous", "additive", "nonneg_linear", "antisymmetric"] {
        assert_eq!(get(&diff, p), "holds-on-samples", "diff {p}");
    }
    assert_eq!(get(&diff, "nondecreasing"), "violated");
    let sum = verdicts("sum");
    assert_eq!(get(&sum, "nondecreasing"), "holds-on-samples");
    assert_eq!(get(&sum, "antisymmetric"), "violated");
    let prod = json(&run(&["probe", "prod"]));
    let seq = prod["checks"].as_array().unwrap().iter().find(|c| c["probe"]["property"] == "seq_upper_bounded").unwrap();
    assert_eq!(seq["probe"]["verdict"], "violated");
    assert_eq!(seq["probe"]["witness"]["form"], "sequence");
    assert_eq!(run(&["probe", "no_such_phi"]).status.code(), Some(2));
}

#[test]
fn curve_writes_lossless_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "helix.json", HELIX);
    let csv_path = dir.path().join("curve.csv");
    let out = run(&[
        "curve", "--config", &cfg, "--function", "cube", "--x", "-2,0", "--y", "-1,1.5707963267948966", "--t-count", "5",
        "--region", "full", "--out", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,lhs,rhs_phi,rhs_chord"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2][..3], [0.5, -3.375, -4.5]);

    let two = run(&["curve", "--config", &cfg, "--function", "cube", "--x", "-2,0", "--y", "-1,1", "--t-count", "2"]);
    let text = String::from_utf8(two.stdout).unwrap();
    let ts: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ts, [0.0, 1.0]);

    // x = y: the lhs is constant and rhs_phi = f(x) + t·φ(f(x), f(x)).
    let same = run(&["curve", "--config", &cfg, "--function", "cube", "--x", "1,2", "--y", "1,2", "--t-count", "3"]);
    for line in String::from_utf8(same.stdout).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!((v[1], v[2]), (1.0, 1.0));
    }

    let outside = run(&["curve", "--config", &cfg, "--function", "cube", "--x", "4,0", "--y", "0,0", "--region", "full"]);
    assert_eq!(outside.status.code(), Some(2));
}

#[test]
fn emitted_witnesses_revalidate_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "helix.json", HELIX);
    let wdir = dir.path().join("witnesses");
    let out = run(&["check", "--config", &cfg, "--emit-witnesses", wdir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let mut files: Vec<_> = std::fs::read_dir(&wdir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 2, "{files:?}");
    for f in files {
        let out = run(&["check", "--config", f.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let r = json(&out);
        assert_eq!(r["checks"][0]["kind"], "witness");
        assert_eq!(r["checks"][0]["revalidation"]["confirmed"], true);
    }
}

#[test]
fn tampered_witness_is_not_confirmed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.json",
        r#"{
  "functions": {"cube": "h1^3"},
  "regions": {"full": [[-3, 3], "circle"]},
  "checks": [{"name": "w", "kind": "witness", "expect": "violated",
    "of": {"kind": "geodesic_phi_convex", "f": "cube", "phi": "diff", "region": "full"},
    "violation": {"x": [1, 0], "y": [2, 0], "t": 0.5, "lhs": 100, "rhs": 0, "margin": 100}}]
}"#,
    );
    let out = run(&["check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["checks"][0]["revalidation"]["confirmed"], false);
}

#[test]
fn reports_are_byte_identical_and_seed_driven() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "helix.json", HELIX);
    let a = run(&["check", "--config", &cfg, "--samples", "line=9,circle=4,jitter=on", "--seed", "3"]);
    let b = run(&["check", "--config", &cfg, "--samples", "line=9,circle=4,jitter=on", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["check", "--config", &cfg, "--samples", "line=9,circle=4,jitter=on", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(json(&a)["seed"], 3);
}

#[test]
fn text_format_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sq.json", SQUARE);
    let out_path = dir.path().join("report.txt");
    let out = run(&["check", "--config", &cfg, "--format", "text", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    assert!(text.contains("pass-on-samples"));
    assert!(text.ends_with("all expectations matched\n"));
}

#[test]
fn audit_suite_is_stable_under_coarser_tolerance() {
    let a = run(&["audit-paper", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    let b = run(&["audit-paper", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let coarse = run(&["audit-paper", "--format", "json", "--tol", "1e-3"]);
    assert_eq!(coarse.status.code(), Some(0));
    let statuses = |o: &Output| -> Vec<Value> {
        json(o)["checks"].as_array().unwrap().iter().map(|c| c["report"]["status"].clone()).collect()
    };
    assert_eq!(statuses(&a), statuses(&coarse));
    let text = run(&["audit-paper"]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("helix_full_displayed"));
}
