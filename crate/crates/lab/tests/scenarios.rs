use proptest::prelude::*;

use obstruction_core::functional::Sequential;
use obstruction_lab::report::{Real, Report};
use obstruction_lab::run::{run, stacks, validate, RunConfig};
use obstruction_lab::scenario::{builtin, from_json, Overrides, Points, Tag, CATALOG};
use obstruction_lab::{Command, LabError};

fn params(kv: &[(&str, &str)]) -> Overrides {
    kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn catalog_scenarios_resolve_and_declared_tags_hold() {
    let cfg = RunConfig::new(Command::Validate);
    for id in CATALOG {
        let s = builtin(id, &Overrides::new()).unwrap();
        let r = s.resolve(Some(8)).unwrap();
        let v = validate(&cfg, &r, &Sequential).unwrap();
        assert!(v.passed, "{}: {:?}", id, v.tags);
        assert_eq!(r.has(Tag::Closed), r.closed.is_some(), "{}", id);
    }
}

#[test]
fn catalog_round_trips_through_json() {
    for id in CATALOG {
        let s = builtin(id, &params(&[])).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(from_json(&text).unwrap(), s, "{}", id);
    }
}

#[test]
fn unknown_and_malformed_parameters_are_input_errors() {
    let e = builtin("sphere_s3", &params(&[("a", "1")])).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = builtin("cylinder_s2xr", &params(&[("a", "wide")])).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = builtin("graph_flat", &params(&[("f", "x1 +* x2")])).unwrap().resolve(None).unwrap_err();
    assert!(matches!(e, LabError::Expression { .. }), "{:?}", e);
}

#[test]
fn scenario_files_reject_unknown_fields() {
    let text = r#"{"id": "x", "ambient_dim": 4, "metric": {"catalog": "euclidean"},
        "embedding": {"catalog": "plane"}, "points": [[0, 0, 0]], "colour": "red"}"#;
    assert_eq!(from_json(text).unwrap_err().exit_code(), 2);
}

#[test]
fn wrong_point_dimension_is_rejected() {
    let text = r#"{"id": "x", "ambient_dim": 4, "metric": {"catalog": "euclidean"},
        "embedding": {"catalog": "plane"}, "points": [[0, 0]]}"#;
    assert_eq!(from_json(text).unwrap().resolve(None).unwrap_err().exit_code(), 2);
}

#[test]
fn closed_tag_needs_periodic_data() {
    let text = r#"{"id": "x", "ambient_dim": 4, "metric": {"catalog": "euclidean"},
        "embedding": {"graph": "0.1*x1"}, "points": {"grid": 8}, "tags": ["closed"]}"#;
    assert_eq!(from_json(text).unwrap().resolve(None).unwrap_err().exit_code(), 3);
}

#[test]
fn grid_points_sample_the_torus() {
    let s = builtin("torus_graph", &Overrides::new()).unwrap();
    let Points::Grid { grid, sample } = s.points else { panic!("torus scenarios use grid points") };
    assert_eq!(grid, 32);
    let r = s.resolve(None).unwrap();
    assert_eq!(r.points.len(), sample);
    for x in &r.points {
        assert!(x.iter().all(|&c| (0.0..std::f64::consts::TAU).contains(&c)));
    }
}

#[test]
fn catalog_normals_point_outward() {
    let cfg = RunConfig::new(Command::Stacks);
    for id in ["sphere_s3", "sphere_s2", "cylinder_s2xr", "cylinder_s1xr"] {
        let r = builtin(id, &params(&[])).unwrap().resolve(None).unwrap();
        let st = stacks(&cfg, &r, &Sequential).unwrap();
        for p in &st.points {
            assert!(p.surface.mean.0 > 0.0, "{}: H = {}", id, p.surface.mean.0);
        }
    }
}

#[test]
fn all_command_on_a_small_scenario() {
    let r = builtin("graph_flat_n2", &Overrides::new()).unwrap().resolve(None).unwrap();
    let rep = run(&RunConfig::new(Command::All), &r, &Sequential).unwrap();
    assert!(rep.passed());
    let text = rep.to_json();
    let back = Report::from_json(&text).unwrap();
    assert_eq!(back, rep);
    assert_eq!(back.to_json(), text);
}

#[test]
fn reports_round_trip_bit_for_bit() {
    for (id, cmd) in [("perturbed", Command::Obstruction), ("s4_round", Command::Identities), ("perturbed_n2", Command::Expansion)] {
        let r = builtin(id, &Overrides::new()).unwrap().resolve(None).unwrap();
        let rep = run(&RunConfig::new(cmd), &r, &Sequential).unwrap();
        let text = rep.to_json();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back, rep, "{}", id);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn einstein_sphere_flags_vacuous_entries() {
    let r = builtin("s4_round", &Overrides::new()).unwrap().resolve(None).unwrap();
    let Report::Identities(rep) = run(&RunConfig::new(Command::Identities), &r, &Sequential).unwrap() else {
        panic!("wrong report kind")
    };
    let surp: Vec<_> = rep.rows.iter().filter(|row| row.identity_id == "surp2_einstein").collect();
    assert!(!surp.is_empty());
    assert!(surp.iter().all(|row| row.status == "vacuous"));
}

#[test]
fn non_finite_reals_become_null() {
    assert_eq!(serde_json::to_string(&Real(f64::NAN)).unwrap(), "null");
    let back: Real = serde_json::from_str("null").unwrap();
    assert!(back.0.is_nan());
}

proptest! {
    #[test]
    fn reals_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let text = serde_json::to_string(&Real(x)).unwrap();
        let digits = text.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        prop_assert_eq!(digits.len(), 17);
        let back: Real = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.0.to_bits(), x.to_bits());
    }
}
