mod common;

use common::*;
use obstruction_core::obstruction::{conformal_checks, FormulaId, ObstructionReport, Point, Tolerance};
use obstruction_core::Error;

fn report(s: &obstruction_core::Setup, x: &[f64]) -> ObstructionReport {
    let p = Point::new(s, x, 6, true).unwrap();
    ObstructionReport::build(&p, &[]).unwrap()
}

fn value(r: &ObstructionReport, id: FormulaId) -> f64 {
    r.get(id).unwrap().value
}

#[test]
fn cylinder_values_match_closed_form() {
    for a in [0.7f64, 1.0, 1.5] {
        let r = report(&cylinder3(a, -1.0), &[1.0, 0.9, 0.4]);
        let want = -1.0 / (27.0 * a.powi(4));
        for (id, v) in &r.values {
            assert!((v.value - want).abs() < 1e-12 * (1.0 + want.abs()), "{} = {} at a = {}", id.name(), v.value, a);
        }
        let r = report(&cylinder2(a), &[1.0, 0.9]);
        let want = -1.0 / (12.0 * a.powi(3));
        assert!((value(&r, FormulaId::B2Bianchi) - want).abs() < 1e-12, "a = {}", a);
    }
}

#[test]
fn umbilic_spheres_are_unobstructed() {
    for x in [[1.0, 0.9, 0.4], [0.5, 2.0, 1.0]] {
        let r = report(&sphere3(2.0), &x);
        assert!(r.values.iter().all(|(_, v)| v.value.abs() < 1e-10 * (1.0 + v.scale)));
    }
}

#[test]
fn formulas_agree_on_a_generic_background() {
    for eps in [0.1, 0.4] {
        let r = report(&perturbed(eps), &X3);
        assert!(r.worst_ratio(&Tolerance::default()) <= 1.0, "eps = {}: {:?}", eps, r.values);
        assert!(r.skipped.iter().any(|(id, _)| *id == FormulaId::B3Flat));
        let b = value(&r, FormulaId::B3Oracle);
        assert!(b.abs() > 1e-4, "generic value should not vanish: {}", b);
    }
    let r = report(&perturbed2(0.2), &X2);
    assert!(r.worst_ratio(&Tolerance::default()) <= 1.0, "{:?}", r.values);
}

#[test]
fn class_restricted_formulas_join_in_their_class() {
    let r = report(&flat_graph3(), &X3);
    assert!(r.skipped.is_empty(), "{:?}", r.skipped);
    assert!(r.worst_ratio(&Tolerance::default()) <= 1.0);
    let r = report(&conformally_flat("0.1*(x1 + x2*x3)"), &X3);
    assert!(r.get(FormulaId::B3ConformallyFlat).is_some());
    assert!(r.worst_ratio(&Tolerance::default()) <= 1.0);
    let r = report(&round_s4(), &X3);
    assert!(r.get(FormulaId::B3Einstein).is_some());
}

#[test]
fn disputed_formula_is_flagged() {
    assert!(FormulaId::B3GghwPublished.is_disputed());
    assert_eq!(FormulaId::ALL.iter().filter(|f| f.is_disputed()).count(), 1);
    for f in FormulaId::ALL {
        assert_eq!(FormulaId::parse(f.name()).unwrap(), f);
    }
    assert!(matches!(FormulaId::parse("b4_volume"), Err(Error::Invalid(_))));
}

#[test]
fn obstructions_are_conformally_covariant() {
    let s = perturbed(0.1);
    for phi in ["0.1*(x1 + x2*x4)", "0.2*sin(x3) - 0.1*x1*x4"] {
        let checks = conformal_checks(&s, &X3, &expr(4, phi), 6).unwrap();
        assert!(!checks.is_empty());
        for c in checks {
            assert!(c.residual < 1e-8, "{} under {}: {:e}", c.quantity, phi, c.residual);
        }
    }
}

#[test]
fn wrong_dimension_is_out_of_scope() {
    let p = Point::new(&flat_graph2(), &X2, 6, true).unwrap();
    assert!(matches!(p.compute(FormulaId::B3Final), Err(Error::Scope(_))));
}
