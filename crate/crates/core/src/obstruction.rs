//! The obstructions `B_2` and `B_3` through each of their closed formulas.
//!
//! Every formula is a separate function of the pointwise stacks. They share
//! no algebra beyond the stacks themselves, so agreement between them is a
//! real check.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::expansion::{lap_prime, Expansion, Remainder};
use crate::expr::Expr;
use crate::geometry::{Geometry, Setup};
use crate::tensor::Tensor;

/// Running sum that remembers its largest summand.
#[derive(Clone, Copy, Debug, Default)]
pub struct Terms {
    sum: f64,
    scale: f64,
}

impl Terms {
    pub fn new() -> Terms {
        Terms::default()
    }

    pub fn add(&mut self, t: f64) -> &mut Terms {
        self.sum += t;
        self.scale = self.scale.max(t.abs());
        self
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Divide the sum and the scale by `d`.
    pub fn over(&self, d: f64) -> Value {
        Value { value: self.sum / d, scale: self.scale / d.abs() }
    }
}

/// A computed number together with the size of its largest ingredient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Value {
    pub value: f64,
    pub scale: f64,
}

impl Value {
    pub fn exact(v: f64) -> Value {
        Value { value: v, scale: v.abs() }
    }
}

/// Absolute floor plus a relative allowance on the largest term involved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-7 }
    }
}

impl Tolerance {
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale
    }

    pub fn accepts(&self, diff: f64, scale: f64) -> bool {
        diff.abs() <= self.bound(scale)
    }

    /// How many allowances `a` and `b` are apart; at most 1 means they agree.
    pub fn ratio(&self, a: &Value, b: &Value) -> f64 {
        let scale = a.scale.max(b.scale).max(a.value.abs()).max(b.value.abs());
        (a.value - b.value).abs() / self.bound(scale)
    }
}

/// Which special classes of background a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Class {
    pub flat: bool,
    pub conformally_flat: bool,
    pub einstein: bool,
}

impl Class {
    /// Threshold on curvature components, relative to `1 + |R̄|`.
    pub const TOL: f64 = 1e-9;

    pub fn of(geo: &Geometry) -> Class {
        let a = &geo.ambient;
        let tol = Class::TOL * (1.0 + a.riem.max_abs());
        Class { flat: a.is_flat(tol), conformally_flat: a.is_conformally_flat(tol), einstein: a.is_einstein(tol) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormulaId {
    B2Oracle,
    B2Volume,
    B2Bianchi,
    B2Acf,
    B2Flat,
    B3Oracle,
    B3Volume,
    B3Inter1,
    B3MainProp,
    B3Final,
    B3Flat,
    B3ConformallyFlat,
    B3Einstein,
    B3GghwArxiv,
    B3GghwPublished,
}

/// Background class a formula is valid on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Requirement {
    Any,
    Flat,
    ConformallyFlat,
    Einstein,
}

impl Requirement {
    pub fn holds(self, c: &Class) -> bool {
        match self {
            Requirement::Any => true,
            Requirement::Flat => c.flat,
            Requirement::ConformallyFlat => c.conformally_flat,
            Requirement::Einstein => c.einstein,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Requirement::Any => "any",
            Requirement::Flat => "flat",
            Requirement::ConformallyFlat => "conformally flat",
            Requirement::Einstein => "Einstein",
        }
    }
}

impl FormulaId {
    pub const ALL: [FormulaId; 15] = [
        FormulaId::B2Oracle,
        FormulaId::B2Volume,
        FormulaId::B2Bianchi,
        FormulaId::B2Acf,
        FormulaId::B2Flat,
        FormulaId::B3Oracle,
        FormulaId::B3Volume,
        FormulaId::B3Inter1,
        FormulaId::B3MainProp,
        FormulaId::B3Final,
        FormulaId::B3Flat,
        FormulaId::B3ConformallyFlat,
        FormulaId::B3Einstein,
        FormulaId::B3GghwArxiv,
        FormulaId::B3GghwPublished,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaId::B2Oracle => "b2_oracle",
            FormulaId::B2Volume => "b2_volume",
            FormulaId::B2Bianchi => "b2_bianchi",
            FormulaId::B2Acf => "b2_acf",
            FormulaId::B2Flat => "b2_flat",
            FormulaId::B3Oracle => "b3_oracle",
            FormulaId::B3Volume => "b3_volume",
            FormulaId::B3Inter1 => "b3_inter1",
            FormulaId::B3MainProp => "b3_main_prop",
            FormulaId::B3Final => "b3_final",
            FormulaId::B3Flat => "b3_flat",
            FormulaId::B3ConformallyFlat => "b3_conformally_flat",
            FormulaId::B3Einstein => "b3_einstein",
            FormulaId::B3GghwArxiv => "b3_gghw_arxiv",
            FormulaId::B3GghwPublished => "b3_gghw_published",
        }
    }

    pub fn parse(s: &str) -> Result<FormulaId> {
        FormulaId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown formula `{}`", s)))
    }

    /// Hypersurface dimension the formula is written for.
    pub fn dim(self) -> usize {
        match self {
            FormulaId::B2Oracle | FormulaId::B2Volume | FormulaId::B2Bianchi | FormulaId::B2Acf | FormulaId::B2Flat => 2,
            _ => 3,
        }
    }

    pub fn requirement(self) -> Requirement {
        match self {
            FormulaId::B2Flat | FormulaId::B3Flat => Requirement::Flat,
            FormulaId::B3ConformallyFlat => Requirement::ConformallyFlat,
            FormulaId::B3Einstein => Requirement::Einstein,
            _ => Requirement::Any,
        }
    }

    pub fn is_oracle(self) -> bool {
        matches!(self, FormulaId::B2Oracle | FormulaId::B3Oracle)
    }

    /// The published formula known to disagree off conformally flat backgrounds.
    pub fn is_disputed(self) -> bool {
        self == FormulaId::B3GghwPublished
    }

    pub fn for_dim(n: usize) -> impl Iterator<Item = FormulaId> {
        FormulaId::ALL.into_iter().filter(move |f| f.dim() == n)
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Jet order the closed formulas need at the base point.
pub const MIN_ORDER: usize = 5;

/// Everything the formulas read at one point.
#[derive(Clone, Debug)]
pub struct Point {
    pub geo: Geometry,
    pub exp: Expansion,
    pub remainder: Option<Remainder>,
    pub class: Class,
}

impl Point {
    /// Evaluate the stacks at `x0`; `oracle` also solves the Yamabe equation
    /// in normal coordinates.
    pub fn new(setup: &Setup, x0: &[f64], order: usize, oracle: bool) -> Result<Point> {
        if order < MIN_ORDER {
            return Err(Error::order(MIN_ORDER, order, "obstruction formulas"));
        }
        let geo = setup.at(x0, order)?;
        let exp = Expansion::new(&geo)?;
        let remainder = if oracle { Some(Remainder::new(&setup.metric, &setup.embedding, x0)?) } else { None };
        let class = Class::of(&geo);
        Ok(Point { geo, exp, remainder, class })
    }

    pub fn n(&self) -> usize {
        self.geo.n
    }

    /// Scope check followed by the formula itself.
    pub fn compute(&self, id: FormulaId) -> Result<Value> {
        if id.dim() != self.n() {
            return Err(Error::Scope(format!("{} is for n = {}, surface has n = {}", id, id.dim(), self.n())));
        }
        let req = id.requirement();
        if !req.holds(&self.class) {
            return Err(Error::Scope(format!("{} needs a {} background", id, req.name())));
        }
        match id {
            FormulaId::B2Oracle | FormulaId::B3Oracle => {
                let r = self
                    .remainder
                    .as_ref()
                    .ok_or_else(|| Error::Invalid(format!("{} needs the normal-coordinate solve", id)))?;
                Ok(Value::exact(r.recursive))
            }
            FormulaId::B2Volume => Ok(b2_volume(&self.geo, &self.exp)),
            FormulaId::B2Bianchi => Ok(b2_bianchi(&self.geo)),
            FormulaId::B2Acf => Ok(b2_acf(&self.geo)),
            FormulaId::B2Flat => Ok(b2_flat(&self.geo)),
            FormulaId::B3Volume => b3_volume(&self.geo, &self.exp),
            FormulaId::B3Inter1 => b3_inter1(&self.geo),
            FormulaId::B3MainProp => Ok(b3_main_prop(&self.geo)),
            FormulaId::B3Final => b3_final(&self.geo),
            FormulaId::B3Flat => Ok(b3_flat(&self.geo)),
            FormulaId::B3ConformallyFlat => Ok(b3_conformally_flat(&self.geo)),
            FormulaId::B3Einstein => Ok(b3_einstein(&self.geo)),
            FormulaId::B3GghwArxiv => b3_gghw_arxiv(&self.geo),
            FormulaId::B3GghwPublished => b3_gghw_published(&self.geo),
        }
    }
}

fn need_n(geo: &Geometry, n: usize, what: &str) -> Result<()> {
    if geo.n == n {
        Ok(())
    } else {
        Err(Error::Scope(format!("{} is defined for n = {}", what, n)))
    }
}

fn schouten(geo: &Geometry) -> Result<&Tensor> {
    geo.surface.schouten.as_ref().ok_or_else(|| Error::Scope("intrinsic Schouten tensor needs n > 2".into()))
}

/// `B_2` from the volume coefficients.
pub fn b2_volume(geo: &Geometry, exp: &Expansion) -> Value {
    let v = &exp.v_trace;
    let lap_s2 = 0.5 * geo.surface.lap_h;
    let mut t = Terms::new();
    t.add(-2.0 * v[2])
        .add(-libm::pow(v[0], 3.0) / 12.0)
        .add(v[0] * v[1] / 3.0)
        .add(-2.0 / 3.0 * lap_s2)
        .add(-2.0 / 3.0 * v[0] * exp.jbar)
        .add(-2.0 / 3.0 * exp.jbar_p);
    t.over(1.0)
}

pub fn b2_bianchi(geo: &Geometry) -> Value {
    let s = &geo.surface;
    let mut t = Terms::new();
    t.add(s.lap_h).add(s.mean * s.lo_norm2).add(s.div_p0).add(s.lo.dot(&s.pbar_t));
    t.over(-3.0)
}

pub fn b2_acf(geo: &Geometry) -> Value {
    let s = &geo.surface;
    let mut t = Terms::new();
    t.add(s.divdiv_lo).add(s.mean * s.lo_norm2).add(s.lo.dot(&s.pbar_t));
    t.over(-3.0)
}

pub fn b2_flat(geo: &Geometry) -> Value {
    let s = &geo.surface;
    let mut t = Terms::new();
    t.add(s.mean * s.lo_norm2).add(s.lap_h).add(2.0 * s.tr_lo3);
    t.over(-3.0)
}

/// `-Δσ₃/2 - v₁Δσ₂/3 - Δ'σ₂/2 + |dσ₂|²` for `n = 3`, from `σ₂ = H/2` and
/// `σ₃ = -(|ů|² + 2P̄₀₀)/6`.
pub fn b3_last_line(geo: &Geometry) -> Terms {
    let s = &geo.surface;
    let lap_s3 = -(s.lap_lo_norm2 + 2.0 * s.lap_p00) / 6.0;
    let lap_s2 = 0.5 * s.lap_h;
    let dprime = lap_prime(geo, &s.hess_h.scale(0.5), &s.dh.scale(0.5));
    let mut t = Terms::new();
    t.add(-0.5 * lap_s3).add(-s.mean * lap_s2).add(-0.5 * dprime).add(0.25 * s.dh.norm2());
    t
}

/// `B_3` from the volume coefficients and normal derivatives of `J̄`.
pub fn b3_volume(geo: &Geometry, exp: &Expansion) -> Result<Value> {
    need_n(geo, 3, "b3_volume")?;
    let v = &exp.v_trace;
    if v.len() < 4 {
        return Err(Error::order(MIN_ORDER, geo.order, "fourth volume coefficient"));
    }
    let jpp = exp.jbar_pp.ok_or_else(|| Error::order(MIN_ORDER, geo.order, "second normal derivative of J̄"))?;
    let last = b3_last_line(geo);
    let mut t = Terms::new();
    t.add(-2.0 * v[3])
        .add(0.5 * v[0] * v[2])
        .add(v[1] * v[1] / 3.0)
        .add(-7.0 / 18.0 * v[0] * v[0] * v[1])
        .add(2.0 / 27.0 * libm::pow(v[0], 4.0))
        .add(-exp.jbar * v[1] / 3.0)
        .add(-5.0 / 12.0 * exp.jbar_p * v[0])
        .add(-0.25 * jpp)
        .add(last.sum());
    let mut out = t.over(1.0);
    out.scale = out.scale.max(last.scale());
    Ok(out)
}

/// The flat part shared by several evaluations, term by term.
fn flat_terms(t: &mut Terms, geo: &Geometry) {
    let s = &geo.surface;
    t.add(s.lap_lo_norm2)
        .add(6.0 * s.lo.dot(&s.hess_h))
        .add(6.0 * s.mean * s.tr_lo3)
        .add(s.lo_norm2 * s.lo_norm2)
        .add(12.0 * s.dh.norm2());
}

pub fn b3_inter1(geo: &Geometry) -> Result<Value> {
    need_n(geo, 3, "b3_inter1")?;
    let s = &geo.surface;
    let a = &geo.ambient;
    let h = s.mean;
    let gbar = a.g_normal();
    let d00 = a.d00_ric00()?;
    let spp = a.scal_pp()?;
    let d0 = a.d0_ric00();
    let ric00 = a.ric00();
    let jb = a.jbar;
    let lo2n = s.lo_norm2;
    let mut t = Terms::new();
    t.add(d00 - 0.5 * spp)
        .add(5.0 * h * (d0 - 0.5 * a.scal_p()))
        .add(2.0 * h * d0)
        .add(2.0 * gbar.norm2())
        .add(-2.0 * ric00 * ric00)
        .add(2.0 * ric00 * jb)
        .add(8.0 * h * h * ric00)
        .add(-12.0 * h * h * jb)
        .add(6.0 * s.dh.dot(&s.ric0))
        .add(2.0 * s.lap_p00);
    t.add(-2.0 * s.lo.dot(&a.d0_r0ij0()))
        .add(-2.0 * h * s.lo.dot(&gbar))
        .add(8.0 * s.lo2.dot(&gbar))
        .add(-4.0 * lo2n * ric00)
        .add(2.0 * lo2n * jb);
    flat_terms(&mut t, geo);
    Ok(t.over(12.0))
}

pub fn b3_main_prop(geo: &Geometry) -> Value {
    let s = &geo.surface;
    let a = &geo.ambient;
    let what = a.w_normal();
    let lo2n = s.lo_norm2;
    let mut t = Terms::new();
    t.add(2.0 * s.divdiv_lo2).add(2.0 * s.div_lo.norm2());
    t.add(2.0 * s.lo.dot(&s.grad_ric0))
        .add(lo2n * a.ric00())
        .add(3.0 * s.lo2.dot(&s.ric_t))
        .add(-6.0 * lo2n * a.jbar);
    t.add(2.0 * s.pbar_t.dot(&what))
        .add(2.0 * what.norm2())
        .add(2.0 * s.divdiv_what)
        .add(-2.0 * s.lo.dot(&a.d0_w0ij0()))
        .add(-2.0 * s.mean * s.lo.dot(&what))
        .add(8.0 * s.lo2.dot(&what));
    t.add(4.0 * s.lo.dot(&s.hess_h)).add(6.0 * s.mean * s.tr_lo3).add(lo2n * lo2n);
    t.over(12.0)
}

/// `LOP(b) = δδ(b) + (P, b)` from a precomputed double divergence.
pub fn lop_value(geo: &Geometry, divdiv_b: f64, b: &Tensor) -> Result<f64> {
    need_n(geo, 3, "LOP")?;
    let tr = b.trace();
    if tr.abs() > 1e-10 * (1.0 + b.max_abs()) {
        return Err(Error::Invalid(format!("LOP argument is not trace-free (trace {:.3e})", tr)));
    }
    Ok(divdiv_b + schouten(geo)?.dot(b))
}

/// `LOP((ů²)∘)`.
pub fn lop_lo2(geo: &Geometry) -> Result<f64> {
    lop_value(geo, geo.surface.divdiv_lo2_tf, &geo.surface.lo2_tf)
}

/// `LOP(𝒲)`.
pub fn lop_what(geo: &Geometry) -> Result<f64> {
    lop_value(geo, geo.surface.divdiv_what, &geo.surface.what)
}

/// `LOP(𝓕∘)`.
pub fn lop_fialkov(geo: &Geometry) -> Result<f64> {
    let s = &geo.surface;
    let f = s.fialkov.as_ref().ok_or_else(|| Error::Scope("Fialkov tensor needs n > 2".into()))?;
    let dd = s.divdiv_fialkov_tf.ok_or_else(|| Error::order(MIN_ORDER, geo.order, "δδ of the Fialkov tensor"))?;
    lop_value(geo, dd, &f.trace_free())
}

/// `ů^{ij} ∇^k W̄_{kij0}`.
pub fn lo_div_w0(geo: &Geometry) -> f64 {
    geo.surface.lo.dot(&geo.surface.div_w0)
}

/// `ů^{ij} ů^{kl} W̄_{kijl}`.
pub fn lo_lo_weyl(geo: &Geometry) -> f64 {
    let n = geo.n;
    let lo = &geo.surface.lo;
    let w = geo.ambient.weyl_t();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += lo.get(&[i, j]) * lo.get(&[k, l]) * w.get(&[k, i, j, l]);
                }
            }
        }
    }
    acc
}

pub fn b3_final(geo: &Geometry) -> Result<Value> {
    need_n(geo, 3, "b3_final")?;
    let s = &geo.surface;
    let a = &geo.ambient;
    let what = &s.what;
    let mut t = Terms::new();
    t.add(6.0 * lop_lo2(geo)?)
        .add(2.0 * s.lo_norm2 * s.lo_norm2)
        .add(2.0 * lop_what(geo)?)
        .add(-2.0 * s.lo.dot(&a.d0_w0ij0()))
        .add(-4.0 * lo_div_w0(geo))
        .add(-4.0 * s.mean * s.lo.dot(what))
        .add(16.0 * s.lo2.dot(what))
        .add(4.0 * what.norm2())
        .add(2.0 * s.w0.norm2());
    Ok(t.over(12.0))
}

pub fn b3_flat(geo: &Geometry) -> Value {
    let mut t = Terms::new();
    flat_terms(&mut t, geo);
    t.over(12.0)
}

pub fn b3_conformally_flat(geo: &Geometry) -> Value {
    let s = &geo.surface;
    let mut t = Terms::new();
    t.add(s.lap_lo_norm2)
        .add(-s.grad_lo.norm2())
        .add(1.5 * s.div_lo.norm2())
        .add(-2.0 * s.j * s.lo_norm2)
        .add(s.lo_norm2 * s.lo_norm2);
    t.over(6.0)
}

pub fn b3_einstein(geo: &Geometry) -> Value {
    let s = &geo.surface;
    let a = &geo.ambient;
    let what = &s.what;
    let mut t = Terms::new();
    t.add(-2.0 * s.lo.dot(&a.d0_w0ij0()))
        .add(-2.0 * s.mean * s.lo.dot(what))
        .add(8.0 * s.lo2.dot(what))
        .add(2.0 * what.norm2());
    flat_terms(&mut t, geo);
    t.over(12.0)
}

/// Hypersurface Bach tensor in the orthonormal frame.
pub fn bach(geo: &Geometry) -> Result<Tensor> {
    need_n(geo, 3, "Bach tensor")?;
    let n = geo.n;
    let s = &geo.surface;
    let dw = geo.ambient.div_weyl();
    let cotton = Tensor::from_fn(n, 2, |x| dw.get(&[0, x[0] + 1, x[1] + 1]));
    // ∇^k W̄_{0ijk} = -∇^k W̄_{jki0}
    let tang = Tensor::from_fn(n, 2, |x| -(0..n).map(|k| s.grad_w0.get(&[k, x[1], k, x[0]])).sum::<f64>());
    let mut b = cotton.sym();
    b.axpy(-s.mean, &s.what);
    b.axpy(1.0, &tang.sym());
    Ok(b)
}

/// `(ů, B)` through its splitting into normal derivative, divergence and
/// quadratic Weyl terms.
pub fn lo_bach_split(geo: &Geometry) -> Terms {
    let n = geo.n;
    let s = &geo.surface;
    let lo = &s.lo;
    let mut div = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                div += lo.get(&[i, j]) * s.grad_w0.get(&[k, j, k, i]);
            }
        }
    }
    let mut t = Terms::new();
    t.add(lo.dot(&geo.ambient.d0_w0ij0()))
        .add(2.0 * s.mean * lo.dot(&s.what))
        .add(-2.0 * div)
        .add(-s.lo2.dot(&s.what))
        .add(-lo_lo_weyl(geo));
    t
}

/// The Weyl-dependent remainder `⋆`, once from conformally invariant pieces
/// and once expanded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Star {
    pub invariant: Value,
    pub expanded: Value,
}

pub fn star_invariant(geo: &Geometry) -> Result<Value> {
    need_n(geo, 3, "star")?;
    let s = &geo.surface;
    let b = bach(geo)?;
    let mut t = Terms::new();
    t.add(2.0 * lop_what(geo)?)
        .add(4.0 * s.what.norm2())
        .add(2.0 * s.w0.norm2())
        .add(-2.0 * s.lo.dot(&b))
        .add(14.0 * s.lo2.dot(&s.what))
        .add(-2.0 * lo_lo_weyl(geo));
    Ok(t.over(1.0))
}

pub fn star_expanded(geo: &Geometry) -> Result<Value> {
    need_n(geo, 3, "star")?;
    let s = &geo.surface;
    let mut t = Terms::new();
    t.add(2.0 * lop_what(geo)?)
        .add(-2.0 * s.lo.dot(&geo.ambient.d0_w0ij0()))
        // ů^{ij} ∇^k W̄_{ikj0} = -ů^{ij} ∇^k W̄_{kij0}
        .add(-4.0 * lo_div_w0(geo))
        .add(-4.0 * s.mean * s.lo.dot(&s.what))
        .add(16.0 * s.lo2.dot(&s.what))
        .add(4.0 * s.what.norm2())
        .add(2.0 * s.w0.norm2());
    Ok(t.over(1.0))
}

pub fn star(geo: &Geometry) -> Result<Star> {
    Ok(Star { invariant: star_invariant(geo)?, expanded: star_expanded(geo)? })
}

pub fn b3_gghw_arxiv(geo: &Geometry) -> Result<Value> {
    let st = star_invariant(geo)?;
    let s = &geo.surface;
    let mut t = Terms::new();
    t.add(6.0 * lop_lo2(geo)?).add(2.0 * s.lo_norm2 * s.lo_norm2).add(st.value);
    let mut out = t.over(12.0);
    out.scale = out.scale.max(st.scale / 12.0);
    Ok(out)
}

pub fn b3_gghw_published(geo: &Geometry) -> Result<Value> {
    need_n(geo, 3, "b3_gghw_published")?;
    let s = &geo.surface;
    let f = s.fialkov.as_ref().ok_or_else(|| Error::Scope("Fialkov tensor needs n > 2".into()))?;
    let fo = f.trace_free();
    let b = bach(geo)?;
    let mut t = Terms::new();
    t.add(4.0 * lop_lo2(geo)?)
        .add(2.0 * lop_fialkov(geo)?)
        .add(-2.0 * s.lo.dot(&b))
        .add(s.lo_norm2 * s.lo_norm2)
        .add(4.0 * fo.dot(f))
        .add(2.0 * fo.dot(&s.lo2))
        .add(2.0 * s.w0.norm2());
    Ok(t.over(12.0))
}

/// One quantity compared before and after an ambient conformal change.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalCheck {
    pub quantity: &'static str,
    /// `e^{weight φ} Q̂ = Q`.
    pub weight: f64,
    /// The conformal factor as written.
    pub factor: String,
    pub original: f64,
    /// `e^{weight φ} Q̂`, largest component for tensors.
    pub rescaled: f64,
    /// `|e^{weight φ} Q̂ - Q| / (1 + |Q|)`, maximised over components.
    pub residual: f64,
}

impl ConformalCheck {
    fn scalar(quantity: &'static str, weight: f64, factor: &str, phi: f64, q: f64, qhat: f64) -> ConformalCheck {
        let rescaled = libm::exp(weight * phi) * qhat;
        ConformalCheck {
            quantity,
            weight,
            factor: factor.into(),
            original: q,
            rescaled,
            residual: (rescaled - q).abs() / (1.0 + q.abs()),
        }
    }
}

/// Recompute everything for `e^{2φ} g` with the same embedding and compare
/// the weighted results. For `n = 3` this covers `B_3`, both LOP arguments,
/// `⋆` and the Bach tensor; for `n = 2` it covers `B_2`.
pub fn conformal_checks(setup: &Setup, x0: &[f64], phi: &Expr, order: usize) -> Result<Vec<ConformalCheck>> {
    let hat = Setup::new(setup.metric.conformal(phi), setup.embedding.clone());
    let geo = setup.at(x0, order)?;
    let geo_hat = hat.at(x0, order)?;
    let p = phi.eval_f64(&geo.jets.y0)?;
    let desc = format!("{}", phi);
    let mut out = Vec::new();
    match geo.n {
        2 => {
            out.push(ConformalCheck::scalar(
                "b2_bianchi",
                3.0,
                &desc,
                p,
                b2_bianchi(&geo).value,
                b2_bianchi(&geo_hat).value,
            ));
        }
        3 => {
            let b = b3_final(&geo)?.value;
            let bh = b3_final(&geo_hat)?.value;
            out.push(ConformalCheck::scalar("b3_final", 4.0, &desc, p, b, bh));
            out.push(ConformalCheck::scalar("lop_lo2_tf", 4.0, &desc, p, lop_lo2(&geo)?, lop_lo2(&geo_hat)?));
            out.push(ConformalCheck::scalar("lop_w", 4.0, &desc, p, lop_what(&geo)?, lop_what(&geo_hat)?));
            out.push(ConformalCheck::scalar(
                "star",
                4.0,
                &desc,
                p,
                star_invariant(&geo)?.value,
                star_invariant(&geo_hat)?.value,
            ));
            // coordinate components: e^φ B̂_ij = B_ij
            let bc = geo.jets.to_coords(&bach(&geo)?);
            let bhc = geo_hat.jets.to_coords(&bach(&geo_hat)?).scale(libm::exp(p));
            let diff = &bhc - &bc;
            let worst = (0..diff.data().len())
                .max_by(|&i, &j| diff.data()[i].abs().total_cmp(&diff.data()[j].abs()))
                .unwrap_or(0);
            out.push(ConformalCheck {
                quantity: "bach",
                weight: 1.0,
                factor: desc.clone(),
                original: bc.data()[worst],
                rescaled: bhc.data()[worst],
                residual: diff.max_abs() / (1.0 + bc.max_abs()),
            });
        }
        n => return Err(Error::Scope(format!("conformal check needs n = 2 or 3, got {}", n))),
    }
    Ok(out)
}

/// The formulas evaluated at one point, with their pairwise differences.
#[derive(Clone, Debug)]
pub struct ObstructionReport {
    pub n: usize,
    pub values: Vec<(FormulaId, Value)>,
    /// Formulas left out, with the reason.
    pub skipped: Vec<(FormulaId, String)>,
    /// `|B_i - B_j|` over `values`, same order.
    pub residual_matrix: Vec<Vec<f64>>,
    pub bach: Option<Tensor>,
    pub lop_values: Vec<(&'static str, f64)>,
    pub star: Option<Star>,
    pub conformal_checks: Vec<ConformalCheck>,
}

impl ObstructionReport {
    /// Evaluate `ids` (all formulas for the dimension when empty). Scope
    /// mismatches of explicitly requested ids are errors; otherwise they are
    /// recorded as skipped.
    pub fn build(point: &Point, ids: &[FormulaId]) -> Result<ObstructionReport> {
        let n = point.n();
        let explicit = !ids.is_empty();
        let list: Vec<FormulaId> = if explicit { ids.to_vec() } else { FormulaId::for_dim(n).collect() };
        let mut values = Vec::new();
        let mut skipped = Vec::new();
        for id in list {
            if id.is_oracle() && point.remainder.is_none() && !explicit {
                skipped.push((id, String::from("normal-coordinate solve not requested")));
                continue;
            }
            match point.compute(id) {
                Ok(v) => values.push((id, v)),
                Err(Error::Scope(msg)) if !explicit => skipped.push((id, msg)),
                Err(e) => return Err(e),
            }
        }
        let residual_matrix = values
            .iter()
            .map(|(_, a)| values.iter().map(|(_, b)| (a.value - b.value).abs()).collect())
            .collect();
        let (bach_t, lop_values, st) = if n == 3 {
            let geo = &point.geo;
            let lops = alloc::vec![("lo2_tf", lop_lo2(geo)?), ("w", lop_what(geo)?), ("fialkov_tf", lop_fialkov(geo)?)];
            (Some(bach(geo)?), lops, Some(star(geo)?))
        } else {
            (None, Vec::new(), None)
        };
        Ok(ObstructionReport {
            n,
            values,
            skipped,
            residual_matrix,
            bach: bach_t,
            lop_values,
            star: st,
            conformal_checks: Vec::new(),
        })
    }

    pub fn get(&self, id: FormulaId) -> Option<Value> {
        self.values.iter().find(|(f, _)| *f == id).map(|(_, v)| *v)
    }

    /// Worst pairwise disagreement in units of the tolerance, ignoring the
    /// disputed published formula. At most 1 means all formulas agree.
    pub fn worst_ratio(&self, tol: &Tolerance) -> f64 {
        let mut worst = 0.0f64;
        for (i, (fa, a)) in self.values.iter().enumerate() {
            for (fb, b) in &self.values[i + 1..] {
                if fa.is_disputed() || fb.is_disputed() {
                    continue;
                }
                worst = worst.max(tol.ratio(a, b));
            }
        }
        worst
    }
}
