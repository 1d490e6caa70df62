use obstruction_core::expr::coords;
use obstruction_core::{Expr, Jet};
use proptest::prelude::*;

const ORDER: usize = 5;

fn jet() -> impl Strategy<Value = Jet> {
    let len = Jet::zero(3, ORDER).coeffs().len();
    (prop::collection::vec(-1.0..1.0f64, len), 0.5..2.0f64).prop_map(|(mut c, v)| {
        c[0] = v;
        Jet::from_coeffs(3, ORDER, c)
    })
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_is_commutative_and_associative(a in jet(), b in jet(), c in jet()) {
        prop_assert!(close(&a.mul(&b), &b.mul(&a), 1e-13));
        prop_assert!(close(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c)), 1e-12));
    }

    #[test]
    fn reciprocal_inverts(a in jet()) {
        let one = Jet::constant(3, ORDER, 1.0);
        prop_assert!(close(&a.mul(&a.recip().unwrap()), &one, 1e-10));
    }

    #[test]
    fn log_and_exp_are_inverse(a in jet()) {
        prop_assert!(close(&a.ln().unwrap().exp(), &a, 1e-10));
        let r = a.sqrt().unwrap();
        prop_assert!(close(&r.mul(&r), &a, 1e-10));
    }

    #[test]
    fn product_rule(a in jet(), b in jet(), axis in 0..3usize) {
        let lhs = a.mul(&b).partial(axis).unwrap();
        let mut rhs = a.truncate(ORDER - 1).mul(&b.partial(axis).unwrap());
        rhs.axpy(1.0, &a.partial(axis).unwrap().mul(&b.truncate(ORDER - 1)));
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn partial_undoes_integrate(a in jet(), axis in 0..3usize) {
        let back = a.truncate(ORDER - 1).integrate(axis).partial(axis).unwrap();
        prop_assert!(close(&back, &a.truncate(ORDER - 1), 1e-13));
    }

    #[test]
    fn pythagoras(a in jet()) {
        let mut s = a.sin().mul(&a.sin());
        s.axpy(1.0, &a.cos().mul(&a.cos()));
        prop_assert!(close(&s, &Jet::constant(3, ORDER, 1.0), 1e-12));
    }

    #[test]
    fn expression_jets_match_finite_differences(x in prop::collection::vec(-1.0..1.0f64, 3)) {
        let e = Expr::parse("exp(0.3*x1)*sin(x2 - x3) + x1*x2^2/(2 + x3^2)", coords(3), &[]).unwrap();
        let j = e.jet(&x, 3).unwrap();
        prop_assert!((j.value() - e.eval_f64(&x).unwrap()).abs() < 1e-14);
        let h = 1e-5;
        for axis in 0..3 {
            let shift = |t: f64| {
                let mut y = x.clone();
                y[axis] += t;
                e.eval_f64(&y).unwrap()
            };
            let fd = (shift(h) - shift(-h)) / (2.0 * h);
            let mut exps = [0u8; 3];
            exps[axis] = 1;
            prop_assert!((j.derivative(&exps) - fd).abs() < 1e-8);
            exps[axis] = 2;
            let fd2 = (shift(h) - 2.0 * shift(0.0) + shift(-h)) / (h * h);
            prop_assert!((j.derivative(&exps) - fd2).abs() < 1e-4);
        }
    }
}
