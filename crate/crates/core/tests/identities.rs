mod common;

use std::collections::BTreeSet;

use common::*;
use obstruction_core::identities::{catalog, find, run_all, Status};
use obstruction_core::Setup;

fn outcomes(s: &Setup, x: &[f64]) -> Vec<obstruction_core::identities::Outcome> {
    run_all(&s.at(x, 6).unwrap(), 1e-7)
}

#[test]
fn catalogue_ids_are_unique() {
    let ids: BTreeSet<_> = catalog().iter().map(|e| e.id).collect();
    assert_eq!(ids.len(), catalog().len());
    assert_eq!(ids.len(), 33);
    assert_eq!(find("trace_id").unwrap().id, "trace_id");
    assert!(find("no_such_identity").is_none());
}

#[test]
fn nothing_fails_anywhere() {
    let cases = [
        ("flat graph", flat_graph3(), X3.to_vec()),
        ("cylinder", cylinder3(1.3, -1.0), vec![1.0, 0.9, 0.4]),
        ("perturbed", perturbed(0.1), X3.to_vec()),
        ("strongly perturbed", perturbed(0.4), X3.to_vec()),
        ("conformally flat", conformally_flat("0.1*(x1 + x2*x3)"), X3.to_vec()),
        ("round S4", round_s4(), X3.to_vec()),
        ("flat surface", flat_graph2(), X2.to_vec()),
        ("perturbed surface", perturbed2(0.2), X2.to_vec()),
    ];
    for (name, s, x) in cases {
        for o in outcomes(&s, &x) {
            assert_ne!(o.status, Status::Fail, "{} on {}: {:?}", o.id, name, o.balance);
        }
    }
}

#[test]
fn generic_background_only_skips_class_restricted_entries() {
    let out = outcomes(&perturbed(0.1), &X3);
    let skipped: BTreeSet<_> = out.iter().filter(|o| o.status == Status::Skipped).map(|o| o.id).collect();
    let want: BTreeSet<_> = ["kappa1_flat", "simons_flat", "basic_div", "surp2_einstein"].into_iter().collect();
    assert_eq!(skipped, want);
    for o in out.iter().filter(|o| o.status == Status::Skipped) {
        assert!(o.note.as_deref().unwrap_or("").starts_with("needs background class"), "{:?}", o.note);
    }
    let passing = out.iter().filter(|o| o.status == Status::Pass).count();
    assert!(passing >= 28, "{} pass", passing);
}

#[test]
fn exact_identities_hold_tightly() {
    for s in [perturbed(0.4), conformally_flat("0.2*sin(x1) + 0.1*x2*x3")] {
        for o in outcomes(&s, &X3).into_iter().filter(|o| o.id == "trace_id" || o.id == "cm_tracefree") {
            assert!(o.balance.normalized() < 1e-10, "{}: {:e}", o.id, o.balance.normalized());
        }
    }
}

#[test]
fn sign_variant_of_new3a_is_rejected() {
    let out = outcomes(&perturbed(0.3), &X3);
    let o = out.iter().find(|o| o.id == "new3a").unwrap();
    assert_eq!(o.status, Status::Pass);
    assert!(o.variant.as_ref().unwrap().normalized() > 1e-4);
}

#[test]
fn surfaces_skip_three_dimensional_entries() {
    let out = outcomes(&flat_graph2(), &X2);
    assert!(out.iter().find(|o| o.id == "trace_id").unwrap().status == Status::Skipped);
    assert!(out.iter().find(|o| o.id == "gauss_codazzi").unwrap().status != Status::Skipped);
}
