use std::path::PathBuf;
use std::process::{Command, Output};

use obstruction_lab::error::ErrorRecord;
use obstruction_lab::Report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_obstruction-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("obstruction-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_report(args: &[&str], name: &str) -> (Output, Report) {
    let path = scratch(name);
    let mut a: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    a.push("--json-out");
    a.push(&p);
    let out = run(&a);
    let text = std::fs::read_to_string(&path).unwrap();
    (out, Report::from_json(&text).unwrap())
}

fn record(out: &Output) -> ErrorRecord {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

#[test]
fn cylinder_obstruction_report() {
    let (out, rep) = json_report(&["obstruction", "--scenario", "cylinder_s2xr", "--a", "1.0"], "cyl.json");
    assert_eq!(out.status.code(), Some(0));
    let Report::Obstruction(r) = rep else { panic!("wrong report kind") };
    for p in &r.points {
        let b = p.values.iter().find(|v| v.id == "b3_final").unwrap().value.0;
        assert!((b + 1.0 / 27.0).abs() < 1e-12, "{}", b);
        assert!(p.max_residual.0 < 1e-9);
        assert_eq!(p.ids.len(), p.residual_matrix.len());
    }
}

#[test]
fn sphere_obstructions_vanish() {
    let (out, rep) = json_report(&["obstruction", "--scenario", "sphere_s3", "--rho", "2"], "sphere.json");
    assert_eq!(out.status.code(), Some(0));
    let Report::Obstruction(r) = rep else { panic!("wrong report kind") };
    for p in &r.points {
        for v in &p.values {
            assert!(v.value.0.abs() < 1e-12, "{} = {}", v.id, v.value.0);
        }
    }
}

#[test]
fn perturbed_identity_suite_passes() {
    let (out, rep) = json_report(&["identities", "--scenario", "perturbed"], "ids.json");
    assert_eq!(out.status.code(), Some(0));
    let Report::Identities(r) = rep else { panic!("wrong report kind") };
    let first = &r.rows[0].point;
    let passing = r.rows.iter().filter(|row| &row.point == first && row.status == "pass").count();
    assert!(passing >= 28, "{} entries pass", passing);
    assert_eq!(r.summary.fail, 0);
}

#[test]
fn malformed_expression_exits_2_with_position() {
    let out = run(&["obstruction", "--scenario", "graph_flat", "--f", "0.3*x1^2 + (x2"]);
    assert_eq!(out.status.code(), Some(2));
    let rec = record(&out);
    assert_eq!(rec.error.kind, "expression");
    assert_eq!(rec.error.position, Some(14));
    assert!(String::from_utf8_lossy(&out.stderr).contains('^'));
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(run(&["obstruction", "--scenario", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(run(&["obstruction", "--scenario", "plane_r4", "--jet-order", "3"]).status.code(), Some(2));
    assert_eq!(run(&["obstruction", "--scenario", "plane_r4", "--formulas", "b9_none"]).status.code(), Some(2));
    assert_eq!(run(&["sphere_s3"]).status.code(), Some(2));
    assert_eq!(run(&["obstruction", "--scenario", "sphere_s3", "--rho", "two"]).status.code(), Some(2));
}

#[test]
fn scope_violations_exit_3() {
    let out = run(&["obstruction", "--scenario", "perturbed", "--formulas", "b3_flat"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(record(&out).error.kind, "scope");
    assert_eq!(run(&["obstruction", "--scenario", "plane_r4", "--formulas", "b2_flat"]).status.code(), Some(3));
    assert_eq!(run(&["variation", "--scenario", "perturbed"]).status.code(), Some(3));
}

#[test]
fn failed_checks_exit_1() {
    let out = run(&["obstruction", "--scenario", "perturbed", "--tol-rel", "0", "--tol-abs", "0", "--no-oracle"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_tags() {
    let (out, rep) = json_report(&["validate", "--scenario", "plane_r4"], "plane.json");
    assert_eq!(out.status.code(), Some(0));
    let Report::Validate(v) = rep else { panic!("wrong report kind") };
    for t in ["flat", "conformally_flat", "einstein"] {
        let c = v.tags.iter().find(|c| c.tag == t).unwrap();
        assert!(c.declared && c.holds, "{}", t);
    }
    assert!(v.budget.iter().all(|b| b.satisfied));

    let (_, rep) = json_report(&["validate", "--scenario", "conf_flat", "--phi", "0.1*x1"], "conf.json");
    let Report::Validate(v) = rep else { panic!("wrong report kind") };
    let cf = v.tags.iter().find(|c| c.tag == "conformally_flat").unwrap();
    assert!(cf.holds && cf.residual.unwrap().0 < 1e-10);
    assert!(!v.tags.iter().find(|c| c.tag == "flat").unwrap().holds);
}

#[test]
fn false_tag_in_file_exits_3() {
    let path = scratch("false_tag.json");
    std::fs::write(
        &path,
        r#"{
  "id": "claims_flat",
  "ambient_dim": 4,
  "metric": {"components": ["1 + 0.1*x2^2", "0", "0", "0", "1", "0", "0", "1", "0", "1"]},
  "embedding": {"graph": "0.2*x1*x2"},
  "points": [[0.1, 0.2, 0.3]],
  "tags": ["flat"]
}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["validate", "--scenario", p]).status.code(), Some(3));
    assert_eq!(run(&["obstruction", "--scenario", p]).status.code(), Some(3));
}

#[test]
fn file_scenario_with_parameter_override() {
    let path = scratch("cyl_file.json");
    std::fs::write(
        &path,
        r#"{
  "id": "cyl_file",
  "ambient_dim": 3,
  "metric": {"catalog": "euclidean"},
  "embedding": {"maps": ["a*cos(x1)", "a*sin(x1)", "x2"], "orientation": 1},
  "points": [[0.4, 0.1]],
  "params": {"a": 1.0}
}"#,
    )
    .unwrap();
    let (out, rep) =
        json_report(&["obstruction", "--scenario", path.to_str().unwrap(), "--a", "2"], "cyl_file_out.json");
    assert_eq!(out.status.code(), Some(0));
    let Report::Obstruction(r) = rep else { panic!("wrong report kind") };
    let b = r.points[0].values.iter().find(|v| v.id == "b2_bianchi").unwrap().value.0;
    assert!((b + 1.0 / 96.0).abs() < 1e-12);
}

#[test]
fn json_is_deterministic_across_thread_counts() {
    let args = ["obstruction", "--scenario", "perturbed", "--json-out", "-"];
    let one = bin().args(args).env("OBSTRUCTION_LAB_THREADS", "1").output().unwrap();
    let two = bin().args(args).env("OBSTRUCTION_LAB_THREADS", "2").output().unwrap();
    let again = bin().args(args).env("OBSTRUCTION_LAB_THREADS", "1").output().unwrap();
    assert!(!one.stdout.is_empty());
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(one.stdout, again.stdout);
}

#[test]
fn small_closed_variation_runs() {
    let (out, rep) = json_report(&["variation", "--scenario", "torus_graph_n2", "--grid", "8"], "torus2.json");
    assert_eq!(out.status.code(), Some(0));
    let Report::Functional(f) = rep else { panic!("wrong report kind") };
    assert!(f.w2.is_some() && f.w3.is_none() && f.variation.is_none());
    assert!(f.quadrature_error.0 < 1e-8);
}

#[test]
fn list_and_show() {
    let out = run(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "s4_round"));
    let out = run(&["show", "--scenario", "perturbed", "--eps", "0.3"]);
    let s: obstruction_lab::Scenario = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s.params["eps"], 0.3);
}
