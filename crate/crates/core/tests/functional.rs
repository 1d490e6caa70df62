mod common;

use common::*;
use obstruction_core::ambient::MetricField;
use obstruction_core::functional::{pointwise_variation, willmore_operator, ClosedScenario, Integrand, Sequential};
use obstruction_core::hypersurface::Embedding;
use obstruction_core::obstruction::b2_bianchi;
use obstruction_core::{Error, Setup};

const STEPS: [f64; 4] = [1e-3, 2e-3, 4e-3, 8e-3];
const TORUS_HEIGHT: &str = "0.05*sin(x1)*sin(x2)*sin(x3) + 0.05*cos(x2) + 0.05*cos(x1 + x2)";

fn flat_torus(height: &str, u: &str, grid: usize) -> ClosedScenario {
    ClosedScenario::new(MetricField::euclidean(4), expr(3, height), expr(3, u), grid).unwrap()
}

#[test]
fn pointwise_first_variations() {
    let u = expr(3, "cos(x1) + 0.3*x2*x3");
    let x = [0.4, 1.3, -0.6];
    let curved = Setup::new(torus_metric(), graph(3, "0.3*sin(x1)*cos(x2) + 0.2*sin(x3)"));
    let flat = Setup::new(MetricField::euclidean(4), graph(3, "0.3*x1^2 - 0.2*x2*x3 + 0.1*x1^3"));
    for s in [curved, flat] {
        let checks = pointwise_variation(&s, &u, &x, 1e-3).unwrap();
        assert_eq!(checks.len(), 4);
        for c in checks {
            assert!(c.residual < 1e-6, "{}: {:e}", c.quantity, c.residual);
        }
    }
}

#[test]
fn quadrature_converges_spectrally() {
    let sc = flat_torus("0.1*sin(x1)", "cos(x1)", 16);
    let a = sc.integrate(Integrand::W3, &Sequential).unwrap();
    let b = sc.with_grid(32).unwrap().integrate(Integrand::W3, &Sequential).unwrap();
    assert!((a - b).abs() < 1e-10, "{:e} vs {:e}", a, b);
    let vol = sc.integrate(Integrand::Volume, &Sequential).unwrap();
    assert!(vol > (2.0 * std::f64::consts::PI).powi(3));
}

#[test]
fn divergences_integrate_to_zero() {
    let sc = ClosedScenario::new(torus_metric(), expr(3, "0.05*sin(x1)*sin(x2)*sin(x3)"), expr(3, "cos(x1)"), 12).unwrap();
    for what in [Integrand::DiffKey, Integrand::WeylDivergence] {
        let v = sc.integrate(what, &Sequential).unwrap();
        assert!(v.abs() < 1e-8, "{}: {:e}", what.name(), v);
    }
}

#[test]
fn energy_is_conformally_invariant() {
    let height = expr(3, "0.3*sin(x1)*sin(x2)*sin(x3) + 0.3*cos(x1) + 0.2*sin(x2 + x3)");
    let sc = ClosedScenario::new(torus_metric(), height, expr(3, "cos(x1)"), 12).unwrap();
    let rescaled = sc.with_metric(torus_metric().conformal(&expr(4, "0.1*sin(x1 + x4) + 0.05*cos(x2)"))).unwrap();
    let a = sc.integrate(Integrand::W3, &Sequential).unwrap();
    let b = rescaled.integrate(Integrand::W3, &Sequential).unwrap();
    assert!(a.abs() > 1e-3, "{:e}", a);
    assert!((a - b).abs() < 1e-7 * a.abs(), "{:e} vs {:e}", a, b);
}

#[test]
fn first_variation_is_the_obstruction() {
    let v = flat_torus(TORUS_HEIGHT, "cos(x1)", 16).normal_variation(&STEPS, &Sequential).unwrap();
    assert!(v.rhs.abs() > 1e-6, "degenerate test surface: {:e}", v.rhs);
    assert!(v.passes(1e-4), "{:?}", v);
    assert!(v.order.unwrap() > 3.5, "{:?}", v);
}

#[test]
fn trivial_variations_vanish() {
    let v = flat_torus(TORUS_HEIGHT, "0", 8).normal_variation(&STEPS[..2], &Sequential).unwrap();
    assert!(v.variation_fd.abs() < 1e-12 && v.rhs.abs() < 1e-12, "{:?}", v);
    let sc = flat_torus("0.1*sin(x1)", "cos(x1)", 8);
    assert!(sc.u_b3(&Sequential).unwrap().abs() < 1e-12);
}

#[test]
fn non_periodic_data_is_rejected() {
    let r = ClosedScenario::new(MetricField::euclidean(4), expr(3, "0.1*x1"), expr(3, "1"), 8);
    assert!(matches!(r, Err(Error::Invalid(_))));
}

#[test]
fn willmore_surfaces() {
    let catenoid = Embedding::parse(2, &["0.5*(exp(x2) + exp(-x2))*cos(x1)", "0.5*(exp(x2) + exp(-x2))*sin(x1)", "x2"], &[], 1.0).unwrap();
    let g = Setup::new(MetricField::euclidean(3), catenoid).at(&[0.3, 0.4], 6).unwrap();
    assert!(g.surface.mean.abs() < 1e-12);
    assert!(willmore_operator(&g).unwrap().abs() < 1e-10);
    assert!(b2_bianchi(&g).value.abs() < 1e-10);

    for x in [[0.1, 0.2], [-0.3, 0.5]] {
        let g = flat_graph2().at(&x, 6).unwrap();
        let w = willmore_operator(&g).unwrap();
        let b = b2_bianchi(&g).value;
        assert!(w.abs() > 1e-3);
        assert!((b + w / 3.0).abs() < 1e-10 * (1.0 + w.abs()), "{} vs {}", b, w);
    }
    assert!(matches!(willmore_operator(&flat_graph3().at(&X3, 4).unwrap()), Err(Error::Scope(_))));
}
