mod common;

use common::*;
use obstruction_core::expansion::{chart_checks, Expansion, Remainder, SERIES_TOL};
use obstruction_core::obstruction::b2_bianchi;
use obstruction_core::{Error, Setup};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn volume_coefficients_agree_across_paths() {
    for s in [flat_graph3(), perturbed(0.3), round_s4(), perturbed2(0.2)] {
        let g = s.at(&s_point(&s), 6).unwrap();
        let e = Expansion::new(&g).unwrap();
        assert!(max_diff(&e.v_trace, &e.v_closed) < 1e-9, "{:?} vs {:?}", e.v_trace, e.v_closed);
    }
    let g = flat_graph3().at(&X3, 6).unwrap();
    let e = Expansion::new(&g).unwrap();
    assert!(max_diff(&e.v_trace, &e.v_flat) < 1e-10);
    assert!(max_diff(&e.sigma, &e.sigma_flat) < 1e-10);
}

fn s_point(s: &Setup) -> Vec<f64> {
    if s.n() == 3 { X3.to_vec() } else { X2.to_vec() }
}

#[test]
fn surfaces_have_a_pole_proportional_to_b2() {
    for s in [flat_graph2(), perturbed2(0.1), perturbed2(0.4), cylinder2(1.3)] {
        let g = s.at(&X2, 6).unwrap();
        let e = Expansion::new(&g).unwrap();
        match e.sigma4() {
            Err(Error::Pole { dim: 2, residue, .. }) => {
                let b2 = b2_bianchi(&g).value;
                assert!((residue + 0.375 * b2).abs() < 1e-12 * (1.0 + b2.abs()), "{} vs {}", residue, b2);
            }
            other => panic!("expected a pole, got {:?}", other),
        }
    }
    let e = Expansion::new(&flat_graph3().at(&X3, 6).unwrap()).unwrap();
    assert!(e.sigma4().is_ok());
}

#[test]
fn direct_solve_matches_closed_coefficients() {
    for s in [perturbed(0.2), conformally_flat("0.1*(x1 + x2*x3)"), perturbed2(0.3)] {
        let x = s_point(&s);
        let r = Remainder::new(&s.metric, &s.embedding, &x).unwrap();
        assert!(r.low_recursive < SERIES_TOL && r.low_parametric < SERIES_TOL);
        assert!(max_diff(&r.sigma, &r.sigma_parametric) < 1e-8);
        let g = s.at(&x, 6).unwrap();
        let e = Expansion::new(&g).unwrap();
        for c in chart_checks(&r.chart, &g, &e).unwrap() {
            assert!(c.residual() < SERIES_TOL, "{}: {} vs {}", c.name, c.chart, c.formula);
        }
    }
}

#[test]
fn low_jet_order_is_reported() {
    let e = perturbed(0.2).at(&X3, 2).and_then(|g| Expansion::new(&g));
    assert!(matches!(e, Err(Error::Order { .. })), "{:?}", e.map(|_| ()));
}
