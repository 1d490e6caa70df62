mod common;

use common::*;
use obstruction_core::ambient::MetricField;
use obstruction_core::hypersurface::Embedding;
use obstruction_core::obstruction::{FormulaId, Point};
use obstruction_core::Setup;
use proptest::prelude::*;

#[test]
fn round_sphere_is_umbilic() {
    let g = sphere3(2.0).at(&[1.0, 0.9, 0.4], 4).unwrap();
    assert!((g.surface.mean - 0.5).abs() < 1e-12, "H = {}", g.surface.mean);
    assert!(g.surface.lo.max_abs() < 1e-12);
    assert!((g.surface.scal - 6.0 / 4.0).abs() < 1e-10);
}

#[test]
fn cylinder_curvatures() {
    let a = 1.5;
    let g = cylinder3(a, -1.0).at(&[1.1, 0.3, 0.2], 4).unwrap();
    let sf = &g.surface;
    assert!((sf.mean - 2.0 / (3.0 * a)).abs() < 1e-12);
    assert!((sf.lo_norm2 - 2.0 / (3.0 * a * a)).abs() < 1e-12);
}

#[test]
fn flat_ambient_has_no_curvature() {
    let g = flat_graph3().at(&X3, 4).unwrap();
    assert!(g.ambient.riem.max_abs() < 1e-14);
    let g = round_s4().at(&X3, 4).unwrap();
    assert!(g.ambient.weyl.max_abs() < 1e-10);
    assert!(g.ambient.riem.max_abs() > 0.1);
}

#[test]
fn degenerate_metric_is_rejected() {
    let m = MetricField::parse(3, &["0", "0", "0", "1", "0", "1"], &[]).unwrap();
    let s = Setup::new(m, graph(2, GRAPH2));
    assert!(s.at(&X2, 4).is_err());
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.4..0.4f64, 4)
}

fn height(c: &[f64]) -> String {
    format!("{}*x1^2 + {}*x2*x3 + {}*x1*x2^2 + {}*sin(x3)", c[0], c[1], c[2], c[3])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flipping_the_normal(c in coefficients(), eps in 0.0..0.3f64) {
        let s = Setup::new(perturbed(eps).metric, graph(3, &height(&c)));
        let f = Setup::new(s.metric.clone(), s.embedding.flipped());
        let (a, b) = (s.at(&X3, 5).unwrap(), f.at(&X3, 5).unwrap());
        prop_assert!((a.surface.mean + b.surface.mean).abs() < 1e-12);
        prop_assert!((a.surface.lo_norm2 - b.surface.lo_norm2).abs() < 1e-12);
        prop_assert!((a.surface.tr_lo3 + b.surface.tr_lo3).abs() < 1e-12);
        let b3 = |s: &Setup| Point::new(s, &X3, 6, false).unwrap().compute(FormulaId::B3Final).unwrap().value;
        let (pa, pb) = (b3(&s), b3(&f));
        prop_assert!((pa - pb).abs() < 1e-10 * (1.0 + pa.abs()), "{} vs {}", pa, pb);
    }

    #[test]
    fn b2_is_odd_under_flips(c in coefficients()) {
        let src = format!("{}*x1^2 + {}*x1*x2 + {}*x2^3 + {}*cos(x1)", c[0], c[1], c[2], c[3]);
        let s = Setup::new(perturbed2(0.2).metric, Embedding::graph(2, expr(2, &src)));
        let f = Setup::new(s.metric.clone(), s.embedding.flipped());
        let b2 = |s: &Setup| Point::new(s, &X2, 6, false).unwrap().compute(FormulaId::B2Bianchi).unwrap().value;
        let (pa, pb) = (b2(&s), b2(&f));
        prop_assert!((pa + pb).abs() < 1e-10 * (1.0 + pa.abs()), "{} vs {}", pa, pb);
    }

    #[test]
    fn trace_free_part_is_trace_free(c in coefficients()) {
        let g = Setup::new(MetricField::euclidean(4), graph(3, &height(&c))).at(&X3, 4).unwrap();
        let s = &g.surface;
        let tr: f64 = (0..3).map(|i| s.lo.get(&[i, i])).sum();
        prop_assert!(tr.abs() < 1e-12);
    }
}
