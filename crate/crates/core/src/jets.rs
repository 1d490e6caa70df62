//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] of arity `m` and order `D` stores the Taylor coefficients
//! `c_α = ∂^α f(p) / α!` for all multi-indices with `|α| ≤ D`. Monomials are
//! laid out by total degree, so the coefficients of a lower-order truncation
//! are a prefix of the full array. Binary operations between jets of
//! different order produce a jet of the smaller order.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use once_cell::race::OnceBox;

use crate::error::{Error, Result};

pub const MAX_ARITY: usize = 5;
pub const MAX_ORDER: usize = 10;

type Exps = [u8; MAX_ARITY];

/// Index tables for all monomials of one arity up to [`MAX_ORDER`].
pub struct Layout {
    arity: usize,
    exps: Vec<Exps>,
    deg: Vec<u8>,
    len_to: [usize; MAX_ORDER + 1],
    row_start: Vec<usize>,
    add: Vec<u16>,
    up: Vec<[u16; MAX_ARITY]>,
    pred: Vec<(u16, u8)>,
    rank: BTreeMap<Exps, u16>,
}

const NONE: u16 = u16::MAX;

fn push_degree(arity: usize, d: usize, axis: usize, cur: &mut Exps, out: &mut Vec<Exps>) {
    if axis + 1 == arity {
        cur[axis] = d as u8;
        out.push(*cur);
        cur[axis] = 0;
        return;
    }
    for e in (0..=d).rev() {
        cur[axis] = e as u8;
        push_degree(arity, d - e, axis + 1, cur, out);
    }
    cur[axis] = 0;
}

impl Layout {
    fn build(arity: usize) -> Layout {
        assert!((1..=MAX_ARITY).contains(&arity), "jet arity {} unsupported", arity);
        let mut exps = Vec::new();
        let mut len_to = [0usize; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_ARITY];
            push_degree(arity, d, 0, &mut cur, &mut exps);
            len_to[d] = exps.len();
        }
        let deg: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut rank = BTreeMap::new();
        for (i, e) in exps.iter().enumerate() {
            rank.insert(*e, i as u16);
        }
        let mut up = vec![[NONE; MAX_ARITY]; exps.len()];
        let mut pred = vec![(0u16, 0u8); exps.len()];
        for (i, e) in exps.iter().enumerate() {
            for a in 0..arity {
                if (deg[i] as usize) < MAX_ORDER {
                    let mut f = *e;
                    f[a] += 1;
                    up[i][a] = rank[&f];
                }
                if e[a] > 0 && pred[i] == (0, 0) && i > 0 {
                    let mut f = *e;
                    f[a] -= 1;
                    pred[i] = (rank[&f], a as u8);
                }
            }
        }
        let mut row_start = Vec::with_capacity(exps.len() + 1);
        let mut add = Vec::new();
        for (i, e) in exps.iter().enumerate() {
            row_start.push(add.len());
            let m = len_to[MAX_ORDER - deg[i] as usize];
            for f in &exps[..m] {
                let mut s = *e;
                for a in 0..arity {
                    s[a] += f[a];
                }
                add.push(rank[&s]);
            }
        }
        row_start.push(add.len());
        Layout { arity, exps, deg, len_to, row_start, add, up, pred, rank }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of monomials of total degree at most `order`.
    pub fn len(&self, order: usize) -> usize {
        self.len_to[order]
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx][..self.arity]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.deg[idx] as usize
    }

    pub fn index(&self, exps: &[u8]) -> Option<usize> {
        let mut key = [0u8; MAX_ARITY];
        key[..exps.len()].copy_from_slice(exps);
        self.rank.get(&key).map(|&i| i as usize)
    }
}

static LAYOUTS: [OnceBox<Layout>; MAX_ARITY + 1] = [const { OnceBox::new() }; MAX_ARITY + 1];

pub fn layout(arity: usize) -> &'static Layout {
    LAYOUTS[arity].get_or_init(|| Box::new(Layout::build(arity)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    arity: u8,
    order: u8,
    c: Vec<f64>,
}

fn check_order(order: usize) {
    assert!(order <= MAX_ORDER, "jet order {} exceeds {}", order, MAX_ORDER);
}

impl Jet {
    pub fn zero(arity: usize, order: usize) -> Jet {
        check_order(order);
        let n = layout(arity).len(order);
        Jet { arity: arity as u8, order: order as u8, c: vec![0.0; n] }
    }

    pub fn constant(arity: usize, order: usize, v: f64) -> Jet {
        let mut j = Jet::zero(arity, order);
        j.c[0] = v;
        j
    }

    /// The coordinate function `x_axis` expanded around a point where it equals `v`.
    pub fn variable(arity: usize, order: usize, axis: usize, v: f64) -> Jet {
        assert!(axis < arity);
        let mut j = Jet::constant(arity, order, v);
        if order > 0 {
            j.c[1 + axis] = 1.0;
        }
        j
    }

    /// All coordinate functions at `base`.
    pub fn variables(order: usize, base: &[f64]) -> Vec<Jet> {
        (0..base.len())
            .map(|a| Jet::variable(base.len(), order, a, base[a]))
            .collect()
    }

    pub fn from_coeffs(arity: usize, order: usize, c: Vec<f64>) -> Jet {
        check_order(order);
        assert_eq!(c.len(), layout(arity).len(order), "coefficient count");
        Jet { arity: arity as u8, order: order as u8, c }
    }

    /// Same shape as `self`, holding the constant `v`.
    pub fn konst(&self, v: f64) -> Jet {
        Jet::constant(self.arity(), self.order(), v)
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    pub fn layout(&self) -> &'static Layout {
        layout(self.arity())
    }

    /// Taylor coefficient of the monomial with the given exponents, zero if
    /// it lies above the truncation order.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        assert_eq!(exps.len(), self.arity());
        match self.layout().index(exps) {
            Some(i) if i < self.c.len() => self.c[i],
            _ => 0.0,
        }
    }

    /// The partial derivative `∂^α f` at the base point.
    pub fn derivative(&self, exps: &[u8]) -> f64 {
        let mut fac = 1.0;
        for &e in exps {
            for k in 2..=e {
                fac *= k as f64;
            }
        }
        self.coeff(exps) * fac
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let n = self.layout().len(order);
        Jet { arity: self.arity, order: order as u8, c: self.c[..n].to_vec() }
    }

    fn same_arity(&self, o: &Jet) {
        assert_eq!(self.arity, o.arity, "jet arity mismatch");
    }

    /// `self += a * x`, truncating to the smaller order.
    pub fn axpy(&mut self, a: f64, x: &Jet) {
        self.same_arity(x);
        if x.order < self.order {
            self.c.truncate(x.c.len());
            self.order = x.order;
        }
        if a == 0.0 {
            return;
        }
        for (s, v) in self.c.iter_mut().zip(&x.c) {
            *s += a * v;
        }
    }

    pub fn scale(&self, a: f64) -> Jet {
        Jet { arity: self.arity, order: self.order, c: self.c.iter().map(|v| v * a).collect() }
    }

    pub fn add_const(&self, a: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += a;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        self.same_arity(o);
        let d = self.order.min(o.order) as usize;
        let lay = self.layout();
        let n = lay.len_to[d];
        let mut out = vec![0.0; n];
        for i in 0..n {
            let a = self.c[i];
            if a == 0.0 {
                continue;
            }
            let m = lay.len_to[d - lay.deg[i] as usize];
            let row = &lay.add[lay.row_start[i]..lay.row_start[i] + m];
            for (k, b) in row.iter().zip(&o.c[..m]) {
                out[*k as usize] += a * b;
            }
        }
        Jet { arity: self.arity, order: d as u8, c: out }
    }

    /// Compose with the univariate series `Σ s_k u^k`, where `u = self - self(0)`.
    pub fn series(&self, s: &[f64]) -> Jet {
        let d = self.order();
        let mut u = self.clone();
        u.c[0] = 0.0;
        let top = d.min(s.len() - 1);
        let mut r = self.konst(s[top]);
        for k in (0..top).rev() {
            r = Jet::mul(&r, &u);
            r.c[0] += s[k];
        }
        r
    }

    fn nonzero_base(&self, what: &str) -> Result<f64> {
        let c0 = self.c[0];
        if c0 == 0.0 || !c0.is_finite() {
            return Err(Error::Singular(format!("{} of a jet with value {}", what, c0)));
        }
        Ok(c0)
    }

    pub fn recip(&self) -> Result<Jet> {
        let c0 = self.nonzero_base("reciprocal")?;
        let d = self.order();
        let mut s = Vec::with_capacity(d + 1);
        let mut p = 1.0 / c0;
        for _ in 0..=d {
            s.push(p);
            p *= -1.0 / c0;
        }
        Ok(self.series(&s))
    }

    pub fn div(&self, o: &Jet) -> Result<Jet> {
        Ok(self.mul(&o.recip()?))
    }

    /// Real power `self^p` for a positive base.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let c0 = self.c[0];
        if !(c0 > 0.0) {
            if c0 == 0.0 && self.order() == 0 && p > 0.0 {
                return Ok(self.konst(0.0));
            }
            if c0 == 0.0 {
                return Err(Error::Singular(format!("power {} at zero", p)));
            }
            return Err(Error::Singular(format!("power {} of negative value {}", p, c0)));
        }
        let d = self.order();
        let mut s = Vec::with_capacity(d + 1);
        let mut b = libm::pow(c0, p);
        for k in 0..=d {
            s.push(b);
            b *= (p - k as f64) / ((k + 1) as f64 * c0);
        }
        Ok(self.series(&s))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    /// Integer power by repeated squaring; exact for polynomial data.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = self.konst(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = Jet::mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = Jet::mul(&base, &base);
            }
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Jet {
        let d = self.order();
        let mut s = Vec::with_capacity(d + 1);
        let mut t = libm::exp(self.c[0]);
        for k in 0..=d {
            s.push(t);
            t /= (k + 1) as f64;
        }
        self.series(&s)
    }

    pub fn ln(&self) -> Result<Jet> {
        let c0 = self.c[0];
        if !(c0 > 0.0) {
            return Err(Error::Singular(format!("logarithm of {}", c0)));
        }
        let d = self.order();
        let mut s = vec![libm::log(c0)];
        let mut p = 1.0;
        for k in 1..=d {
            p /= c0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            s.push(sign * p / k as f64);
        }
        Ok(self.series(&s))
    }

    fn trig(&self, shift: usize) -> Jet {
        let (sn, cs) = (libm::sin(self.c[0]), libm::cos(self.c[0]));
        let cyc = [sn, cs, -sn, -cs];
        let d = self.order();
        let mut s = Vec::with_capacity(d + 1);
        let mut f = 1.0;
        for k in 0..=d {
            if k > 0 {
                f /= k as f64;
            }
            s.push(cyc[(k + shift) % 4] * f);
        }
        self.series(&s)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    /// `∂f/∂x_axis`, one order lower.
    pub fn partial(&self, axis: usize) -> Result<Jet> {
        assert!(axis < self.arity());
        if self.order == 0 {
            return Err(Error::order(1, 0, "partial derivative"));
        }
        let lay = self.layout();
        let d = self.order() - 1;
        let n = lay.len_to[d];
        let mut out = vec![0.0; n];
        for (t, o) in out.iter_mut().enumerate() {
            let src = lay.up[t][axis] as usize;
            *o = self.c[src] * (lay.exps[t][axis] as f64 + 1.0);
        }
        Ok(Jet { arity: self.arity, order: d as u8, c: out })
    }

    /// Antiderivative in `x_axis` vanishing on `x_axis = base`, one order higher.
    pub fn integrate(&self, axis: usize) -> Jet {
        let lay = self.layout();
        let d = self.order() + 1;
        check_order(d);
        let mut out = vec![0.0; lay.len_to[d]];
        for (t, v) in self.c.iter().enumerate() {
            out[lay.up[t][axis] as usize] = v / (lay.exps[t][axis] as f64 + 1.0);
        }
        Jet { arity: self.arity, order: d as u8, c: out }
    }

    /// Product with the offset `x_axis - base`, one order higher.
    pub fn mul_var(&self, axis: usize) -> Jet {
        let lay = self.layout();
        let d = self.order() + 1;
        check_order(d);
        let mut out = vec![0.0; lay.len_to[d]];
        for (t, v) in self.c.iter().enumerate() {
            out[lay.up[t][axis] as usize] = *v;
        }
        Jet { arity: self.arity, order: d as u8, c: out }
    }

    /// Coefficient of `(x_axis - base)^k` as a jet in the remaining variables.
    pub fn slice(&self, axis: usize, k: usize) -> Jet {
        assert!(self.arity() > 1 && k <= self.order());
        let lay = self.layout();
        let sub = layout(self.arity() - 1);
        let d = self.order() - k;
        let mut out = vec![0.0; sub.len_to[d]];
        for (t, v) in self.c.iter().enumerate() {
            let e = &lay.exps[t];
            if e[axis] as usize != k {
                continue;
            }
            let mut f = [0u8; MAX_ARITY];
            let mut p = 0;
            for a in 0..self.arity() {
                if a != axis {
                    f[p] = e[a];
                    p += 1;
                }
            }
            out[sub.rank[&f] as usize] = *v;
        }
        Jet { arity: self.arity - 1, order: d as u8, c: out }
    }

    /// Evaluate at `x_axis - base = s`, leaving a jet in the other variables.
    pub fn substitute(&self, axis: usize, s: f64) -> Jet {
        let mut out = self.slice(axis, 0);
        let mut p = 1.0;
        for k in 1..=self.order() {
            p *= s;
            let sl = self.slice(axis, k);
            for (o, v) in out.c.iter_mut().zip(&sl.c) {
                *o += p * v;
            }
        }
        out
    }

    /// The same function viewed in `arity` variables, the new ones appended last.
    pub fn embed(&self, arity: usize) -> Jet {
        assert!(arity >= self.arity());
        if arity == self.arity() {
            return self.clone();
        }
        let lay = self.layout();
        let big = layout(arity);
        let mut out = vec![0.0; big.len_to[self.order()]];
        for (t, v) in self.c.iter().enumerate() {
            out[big.rank[&lay.exps[t]] as usize] = *v;
        }
        Jet { arity: arity as u8, order: self.order, c: out }
    }

    /// Evaluate the Taylor polynomial at the given offsets from the base point.
    pub fn eval_offset(&self, h: &[f64]) -> f64 {
        let lay = self.layout();
        let mut s = 0.0;
        for (t, v) in self.c.iter().enumerate() {
            let mut m = *v;
            for a in 0..self.arity() {
                for _ in 0..lay.exps[t][a] {
                    m *= h[a];
                }
            }
            s += m;
        }
        s
    }
}

/// Precomputed monomials of an inner map, reused to compose many outer jets.
pub struct Composer {
    arity: usize,
    order: usize,
    deg: usize,
    powers: Vec<Jet>,
}

impl Composer {
    /// `offsets[a]` is the inner map's coordinate `a` minus its value at the
    /// base point; outer jets are expanded around that value.
    pub fn new(offsets: &[Jet], max_deg: usize) -> Composer {
        assert!(!offsets.is_empty());
        let m = offsets[0].arity();
        let order = offsets.iter().map(|o| o.order()).min().unwrap();
        let inner: Vec<Jet> = offsets
            .iter()
            .map(|o| {
                let mut o = o.truncate(order);
                o.c[0] = 0.0;
                o
            })
            .collect();
        let deg = max_deg.min(order);
        let lay = layout(offsets.len());
        let n = lay.len_to[deg];
        let mut powers: Vec<Jet> = Vec::with_capacity(n);
        powers.push(Jet::constant(m, order, 1.0));
        for idx in 1..n {
            let (p, a) = lay.pred[idx];
            let next = Jet::mul(&powers[p as usize], &inner[a as usize]);
            powers.push(next);
        }
        Composer { arity: offsets.len(), order, deg, powers }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn apply(&self, f: &Jet) -> Jet {
        assert_eq!(f.arity(), self.arity, "composition arity");
        let m = self.powers[0].arity();
        let order = f.order().min(self.deg);
        let mut out = Jet::zero(m, order);
        let lay = layout(self.arity);
        let outer = layout(m);
        let top = lay.len_to[f.order().min(self.deg)];
        for idx in 0..top {
            let c = f.c[idx];
            if c == 0.0 {
                continue;
            }
            let dg = lay.deg[idx] as usize;
            if dg > order {
                break;
            }
            let start = if dg == 0 { 0 } else { outer.len_to[dg - 1] };
            let p = &self.powers[idx].c;
            for k in start..out.c.len() {
                out.c[k] += c * p[k];
            }
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let mut r = self.clone();
        r.axpy(1.0, o);
        r
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        Jet::mul(self, o)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, a: f64) -> Jet {
        self.scale(a)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.axpy(1.0, &o);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        self.axpy(-1.0, &o);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::mul(&self, &o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_graded() {
        let l = layout(3);
        assert_eq!(l.len(0), 1);
        assert_eq!(l.len(1), 4);
        assert_eq!(l.len(2), 10);
        assert_eq!(l.exponents(1), &[1, 0, 0]);
        assert_eq!(l.exponents(4), &[2, 0, 0]);
        for i in 1..l.len(4) {
            assert!(l.degree(i - 1) <= l.degree(i));
        }
    }

    #[test]
    fn square_of_variable() {
        let x = Jet::variable(2, 3, 0, 1.5);
        let y = &x * &x;
        assert_eq!(y.coeff(&[0, 0]), 2.25);
        assert_eq!(y.coeff(&[1, 0]), 3.0);
        assert_eq!(y.coeff(&[2, 0]), 1.0);
        assert_eq!(y.coeff(&[3, 0]), 0.0);
    }

    #[test]
    fn reciprocal_is_geometric() {
        let x = Jet::variable(1, 6, 0, 0.0);
        let r = x.scale(-1.0).add_const(1.0).recip().unwrap();
        for k in 0..=6u8 {
            assert!((r.coeff(&[k]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_order_truncates() {
        let a = Jet::variable(2, 4, 0, 1.0);
        let b = Jet::variable(2, 2, 1, 1.0);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }

    #[test]
    fn slice_and_substitute() {
        let v = Jet::variables(4, &[0.0, 0.0]);
        let f = &(&v[0] * &v[1]) + &(&v[1] * &v[1]);
        assert_eq!(f.slice(1, 1).coeff(&[1]), 1.0);
        assert_eq!(f.slice(1, 2).coeff(&[0]), 1.0);
        let g = f.substitute(1, 2.0);
        assert_eq!(g.coeff(&[1]), 2.0);
        assert_eq!(g.coeff(&[0]), 4.0);
    }
}
