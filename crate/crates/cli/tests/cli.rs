use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mixgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixgeo"))
        .args(args)
        .env_remove("MIXGEO_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn analyze_brier_reports_unit_eta() {
    let o = mixgeo(&["analyze", "--loss", "brier", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["properness"]["proper"], true);
    assert_eq!(r["fairness"]["fair"], true);
    let eta = r["mixability"]["eta_star"].as_f64().unwrap();
    assert!((eta - 1.0).abs() < 1e-6);
    let routes = r["mixability"]["routes"].as_object().unwrap();
    assert_eq!(routes.len(), 3);
    for v in routes.values() {
        assert!((v.as_f64().unwrap() - eta).abs() <= 1e-6 * eta);
    }
    assert_eq!(r["slide"]["slides_freely"], true);
    assert_eq!(r["config"]["grid"]["resolution"], 1001);
}

#[test]
fn analyze_spherical_is_not_fundamental() {
    let r = json(&mixgeo(&["analyze", "--loss", "spherical", "--format", "json"]));
    let eta = r["mixability"]["eta_star"].as_f64().unwrap();
    assert!((eta - 2f64.sqrt()).abs() < 1e-4);
    assert_eq!(r["fundamentality"]["fundamental"], false);
    assert_eq!(r["fundamentality"]["b1_inv"], "inf");
    assert_eq!(r["fundamentality"]["b2_inv"], "inf");
}

#[test]
fn analyze_scaled_log_spec_is_fundamental() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "half.json",
        r#"{"name": "half_log", "kind": "derived", "params": {"op": "scale", "of": "log", "a": 0.5}}"#,
    );
    let r = json(&mixgeo(&["analyze", "--spec", &spec, "--format", "json"]));
    assert_eq!(r["fundamentality"]["fundamental"], true);
    assert!((r["fundamentality"]["b1"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((r["mixability"]["eta_star"].as_f64().unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn improper_spec_exits_two_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "swapped_log.json",
        r#"{"name": "swapped_log", "n": 2, "kind": "dsl", "exprs": ["-ln(1-t1)", "-ln(t1)"]}"#,
    );
    let o = mixgeo(&["analyze", "--spec", &spec]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("not proper") && err.contains("witness t"), "{err}");

    let linear = write_spec(dir.path(), "linear.json", r#"{"name": "linear", "n": 2, "kind": "dsl", "exprs": ["t1", "1-t1"]}"#);
    assert_eq!(mixgeo(&["verify", "--spec", &linear]).status.code(), Some(2));
}

#[test]
fn profiles_match_known_values() {
    let o = mixgeo(&["profile", "--loss", "log", "--quantity", "curvature"]);
    assert_eq!(o.status.code(), Some(0));
    let body = stdout(&o);
    assert!(body.starts_with("t,value\n"));
    let row = body.lines().find(|l| l.starts_with("0.5,")).expect("t = 1/2 is a grid point");
    let k: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((k - 0.5f64.sqrt()).abs() < 1e-9);
    assert_eq!(body.lines().count(), 1002);

    let w = stdout(&mixgeo(&["profile", "--loss", "brier", "--quantity", "weight"]));
    for l in w.lines().skip(1) {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 4.0).abs() < 1e-9, "{l}");
    }

    let p = stdout(&mixgeo(&["profile", "--loss", "brier", "--quantity", "pencil_min_eig"]));
    let min = p
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((min - 1.0).abs() < 1e-6, "{min}");
}

#[test]
fn multiclass_profile_has_simplex_columns() {
    let o = mixgeo(&["profile", "--loss", "log", "--n", "3", "--grid", "11", "--quantity", "pencil_min_eig"]);
    assert_eq!(o.status.code(), Some(0));
    let body = stdout(&o);
    assert!(body.starts_with("s1,s2,value\n"));
    for l in body.lines().skip(1) {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{l}");
    }
    let bad = mixgeo(&["profile", "--loss", "log", "--n", "3", "--quantity", "curvature"]);
    assert_eq!(bad.status.code(), Some(64));
}

#[test]
fn profile_values_round_trip_through_json() {
    let csv = stdout(&mixgeo(&["profile", "--loss", "spherical", "--grid", "21", "--quantity", "quotient"]));
    let js = json(&mixgeo(&["profile", "--loss", "spherical", "--grid", "21", "--quantity", "quotient", "--format", "json"]));
    let rows = js["rows"].as_array().unwrap();
    for (line, row) in csv.lines().skip(1).zip(rows) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v.to_bits(), row[1].as_f64().unwrap().to_bits());
    }
}

#[test]
fn verify_passes_for_builtins() {
    for args in [
        vec!["verify", "--loss", "brier"],
        vec!["verify", "--loss", "spherical"],
        vec!["verify", "--loss", "log", "--eta", "1.0"],
        vec!["verify", "--loss", "brier", "--n", "3"],
    ] {
        let o = mixgeo(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stdout(&o));
        assert!(!stdout(&o).contains("[FAIL]"));
    }
    let r = json(&mixgeo(&["verify", "--loss", "log", "--eta", "1.0", "--format", "json"]));
    let exp = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "exp_convexity").unwrap();
    assert_eq!(exp["passed"], true);
}

#[test]
fn canonical_link_of_brier_is_affine() {
    let o = mixgeo(&["canonical-link", "--loss", "brier", "--grid", "101", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let body = stdout(&o);
    assert!(body.starts_with("t,psi,dpsi\n"));
    for l in body.lines().skip(1) {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - (4.0 * f[0] - 2.0)).abs() < 1e-8, "{l}");
    }
}

#[test]
fn decompose_and_slide_check() {
    let r = json(&mixgeo(&["decompose", "--loss", "spherical", "--format", "json"]));
    assert!(r["residual"]["min_value"].as_f64().unwrap() >= 0.0);
    assert_eq!(r["residual"]["degenerate"], false);

    let yes = json(&mixgeo(&["slide-check", "--loss", "brier", "--eta", "0.9", "--format", "json"]));
    assert_eq!(yes["slide"]["slides_freely"], true);
    assert!(yes["summand"]["segments_checked"].as_u64().unwrap() > 0);
    let no = json(&mixgeo(&["slide-check", "--loss", "brier", "--eta", "1.1", "--format", "json"]));
    assert_eq!(no["slide"]["slides_freely"], false);
    assert!(no["summand"].is_null());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(mixgeo(&["analyze"]).status.code(), Some(64));
    assert_eq!(mixgeo(&["analyze", "--loss", "log", "--grid", "5"]).status.code(), Some(64));
    assert_eq!(mixgeo(&["analyze", "--loss", "log", "--margin", "0.2"]).status.code(), Some(64));
    assert_eq!(mixgeo(&["analyze", "--loss", "hinge"]).status.code(), Some(64));
    assert_eq!(mixgeo(&["frobnicate"]).status.code(), Some(64));
    let o = Command::new(env!("CARGO_BIN_EXE_mixgeo"))
        .args(["analyze", "--loss", "log"])
        .env("MIXGEO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
    assert_eq!(mixgeo(&["--help"]).status.code(), Some(0));
}

#[test]
fn out_files_are_atomic_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = Command::new(env!("CARGO_BIN_EXE_mixgeo"))
            .args(["analyze", "--loss", "spherical", "--format", "json", "--out", p.to_str().unwrap()])
            .env("MIXGEO_THREADS", "2")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "analyze");
    assert_eq!(meta["threads"], 2);
    assert_eq!(meta["exit_code"], 0);
    // only the report and its sidecar remain; no temp files are left behind
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["a.json", "a.meta.json", "b.json", "b.meta.json"]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains("\"schema\": 1"));
}

#[test]
fn malformed_specs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(dir.path(), "bad.json", r#"{"name": "x", "n": 2, "kind": "dsl", "exprs": ["ln(", "t1"]}"#);
    let o = mixgeo(&["analyze", "--spec", &bad]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8(o.stderr).unwrap().contains("parse error"));
    assert_eq!(mixgeo(&["analyze", "--spec", "/nonexistent/spec.json"]).status.code(), Some(64));
}
