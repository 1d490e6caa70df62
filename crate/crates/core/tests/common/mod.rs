#![allow(dead_code)]

use obstruction_core::ambient::MetricField;
use obstruction_core::expr::coords;
use obstruction_core::hypersurface::Embedding;
use obstruction_core::{Expr, Setup};

pub const GRAPH3: &str = "0.3*x1^2 - 0.2*x2^2 + 0.25*x3^2 + 0.1*x1*x2 + 0.15*x1*x2*x3 + 0.05*x2^3";
pub const GRAPH2: &str = "0.3*x1^2 - 0.2*x2^2 + 0.1*x1*x2^2";
pub const X3: [f64; 3] = [0.1, 0.2, -0.1];
pub const X2: [f64; 2] = [0.1, 0.2];

const PERTURBATION: [&str; 10] = [
    "1+e*(x1^2*x2 + 0.3*x3^4)",
    "e*x1*x4^2",
    "e*0.2*x2*x3",
    "e*(x3^3-x1)",
    "1+e*(x2^2*x4+x1*x3)",
    "e*0.5*x1^2*x2^2",
    "e*x4",
    "1+e*(x3*x4^2)",
    "e*x1*x2*x3",
    "1+e*(0.4*x1^4+x2*x4)",
];

pub fn expr(n: usize, src: &str) -> Expr {
    Expr::parse(src, coords(n), &[]).unwrap()
}

pub fn graph(n: usize, src: &str) -> Embedding {
    Embedding::graph(n, expr(n, src))
}

pub fn flat_graph3() -> Setup {
    Setup::new(MetricField::euclidean(4), graph(3, GRAPH3))
}

pub fn flat_graph2() -> Setup {
    Setup::new(MetricField::euclidean(3), graph(2, GRAPH2))
}

/// A generic metric on R^4 with no special curvature.
pub fn perturbed(eps: f64) -> Setup {
    let m = MetricField::parse(4, &PERTURBATION, &[("e", eps)]).unwrap();
    Setup::new(m, graph(3, GRAPH3))
}

pub fn perturbed2(eps: f64) -> Setup {
    let m = MetricField::parse(3, &["1+e*x1*x2^2", "e*0.3*x3", "e*x1*x3", "1+e*(x2*x3^2 + 0.2*x1^3)", "e*0.4*x1*x2", "1+e*x1^2*x3"], &[("e", eps)]).unwrap();
    Setup::new(m, graph(2, GRAPH2))
}

/// `e^{2 phi}` times the euclidean metric.
pub fn conformally_flat(phi: &str) -> Setup {
    Setup::new(MetricField::euclidean(4).conformal(&expr(4, phi)), graph(3, GRAPH3))
}

/// Round S^4 in a stereographic chart.
pub fn round_s4() -> Setup {
    conformally_flat("log(2/(1+x1^2+x2^2+x3^2+x4^2))")
}

pub fn sphere3(rho: f64) -> Setup {
    let emb = Embedding::parse(
        3,
        &["r*cos(x1)", "r*sin(x1)*cos(x2)", "r*sin(x1)*sin(x2)*cos(x3)", "r*sin(x1)*sin(x2)*sin(x3)"],
        &[("r", rho)],
        -1.0,
    )
    .unwrap();
    Setup::new(MetricField::euclidean(4), emb)
}

pub fn cylinder3(a: f64, orientation: f64) -> Setup {
    let emb = Embedding::parse(3, &["a*sin(x1)*cos(x2)", "a*sin(x1)*sin(x2)", "a*cos(x1)", "x3"], &[("a", a)], orientation).unwrap();
    Setup::new(MetricField::euclidean(4), emb)
}

pub fn cylinder2(a: f64) -> Setup {
    let emb = Embedding::parse(2, &["a*cos(x1)", "a*sin(x1)", "x2"], &[("a", a)], 1.0).unwrap();
    Setup::new(MetricField::euclidean(3), emb)
}

/// A periodic, curved metric on the flat torus T^4.
pub fn torus_metric() -> MetricField {
    MetricField::parse(
        4,
        &["1+0.1*sin(x1)*cos(x4)", "0.05*sin(x2+x4)", "0", "0", "1+0.1*cos(x3)", "0", "0.02*sin(x1)", "1", "0", "1+0.1*sin(x2)*sin(x4)"],
        &[],
    )
    .unwrap()
}
