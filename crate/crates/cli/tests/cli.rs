use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fstar_core::{Axis, GridFn};
use serde_json::Value;

fn fstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fstar")).args(args).output().expect("binary runs")
}

fn run_in(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fstar(&args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_2_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"id": "bad", "data": {"formula": "quad8", "params": {"lambda": "one", "mu": 1, "a": 0, "b": 0}}}"#)
        .unwrap();
    let out = run_in("example8", cfg.to_str().unwrap(), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/data/params/lambda"), "{err}");
}

#[test]
fn unknown_formula_and_builtin_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"id": "bad", "data": {"formula": "nope", "params": {}}}"#).unwrap();
    let out = run_in("example8", cfg.to_str().unwrap(), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/data"));

    let out = run_in("example8", "builtin:missing", &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn formula_not_accepted_by_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("example8", "builtin:interp-interval", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/data/formula"));
}

#[test]
fn example8_flat_passes_and_deficit_fails() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat");
    let out = run_in("example8", "builtin:example8-flat", &flat, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(&flat);
    assert_eq!(s["scenario"], "example8-flat");
    let names: Vec<&str> = s["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["closed-form match", "Laplacian nonnegative", "Laplacian at the origin"]);
    assert!(flat.join("timings.json").exists());

    let deficit = dir.path().join("deficit");
    let out = run_in("example8", "builtin:example8-deficit", &deficit, &[]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&deficit);
    let lap = s["checks"].as_array().unwrap().iter().find(|c| c["name"] == "Laplacian nonnegative").unwrap();
    assert_eq!(lap["pass"], false);
    assert!(lap["margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn interval_interpolation_table_is_minkowski() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("interp", "builtin:interp-interval", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("endpoints.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,lo,hi"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[1] - 2.0 * v[0]).abs() <= 1e-9 && (v[2] - 1.0 - 3.0 * v[0]).abs() <= 1e-9, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 99);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(run_in("check-product", "builtin:check-product-block", d, &[]).status.code(), Some(0));
        assert_eq!(run_in("interp", "builtin:interp-interval", d, &[]).status.code(), Some(0));
    }
    let mut compared = 0;
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "timings.json" {
            continue;
        }
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        compared += 1;
    }
    assert!(compared >= 4);
}

#[test]
fn csv_round_trips_and_keeps_inf() {
    let dir = tempfile::tempdir().unwrap();
    // The interval end points lie outside the open domain: `+inf`.
    let out = run_in("bm", "builtin:interp-interval", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let path = dir.path().join("neg_log_volume.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",inf"));
    let g = GridFn::read_csv(fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(g.len(), 101);
    assert_eq!(g.values()[0], f64::INFINITY);
    // vol [2t, 1 + 3t] = 1 + t.
    for k in 1..100 {
        let t = g.coords(k)[0];
        assert!((g.values()[k] + (1.0 + t).ln()).abs() < 1e-12);
    }
    let mut again = Vec::new();
    g.write_csv(&mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);
}

#[test]
fn json_format_writes_inf_as_string() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("bm", "builtin:interp-interval", dir.path(), &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("neg_log_volume.json")).unwrap()).unwrap();
    assert_eq!(doc["columns"], serde_json::json!(["x0", "value"]));
    assert_eq!(doc["rows"][0][1], "inf");
    assert!(doc["rows"][1][1].is_f64());
}

#[test]
fn seed_flag_overrides_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("check-product", "builtin:check-product-block", dir.path(), &["--seed", "99"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(dir.path())["seed"], 99);
}

#[test]
fn custom_csv_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let ax = Axis::new(-1.0, 1.0, 9).unwrap();
    let y = Axis::new(-3.0, 3.0, 31).unwrap();
    let psi = GridFn::from_fn_split(vec![ax, ax], vec![y], |x, y| (y[0] - 0.5 * x[0]).powi(2) + x[0] * x[0] + x[1] * x[1])
        .unwrap();
    psi.write_csv(fs::File::create(dir.path().join("psi.csv")).unwrap()).unwrap();
    let cfg = dir.path().join("s.json");
    fs::write(&cfg, r#"{"id": "csv", "data": {"formula": "custom_csv", "params": {"path": "psi.csv"}}}"#).unwrap();
    let out = run_in("check-product", cfg.to_str().unwrap(), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = run_in("prekopa", cfg.to_str().unwrap(), &dir.path().join("p"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let header = fs::read_to_string(dir.path().join("p/marginal.csv")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "x0,x1,phi,laplacian");

    fs::write(&cfg, r#"{"id": "csv", "data": {"formula": "custom_csv", "params": {"path": "absent.csv"}}}"#).unwrap();
    let out = run_in("check-product", cfg.to_str().unwrap(), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/data/params/path"));
}

#[test]
fn numerical_failure_is_a_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    // Dual slopes far outside the data: the family is not comparable there.
    let cfg = dir.path().join("s.json");
    fs::write(
        &cfg,
        r#"{"id": "deg", "domain": {"kind": "Disk", "params": {"center": [0, 0], "radius": 1, "nodes": 16}},
            "data": {"formula": "parabola_family", "params": {}},
            "grid": {"y": [{"min": -1, "max": 1, "count": 21}], "x": [{"min": -1, "max": 1, "count": 9}, {"min": -1, "max": 1, "count": 9}],
                     "dual": [{"min": 50, "max": 60, "count": 5}]},
            "options": {"envelope": true}}"#,
    )
    .unwrap();
    let out = run_in("interp", cfg.to_str().unwrap(), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&dir.path().join("o"));
    assert_eq!(s["pass"], false);
    assert!(s["checks"][0]["detail"].as_str().unwrap().starts_with("error:"));
}

#[test]
fn list_shows_builtins() {
    let out = fstar(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l == "example8-golden"));
    assert!(text.lines().count() >= 12);
}
