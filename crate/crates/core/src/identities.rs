//! Pointwise identities between the hypersurface and background quantities,
//! each evaluated as `|LHS - RHS|` at one point.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::geometry::Geometry;
use crate::obstruction::{b3_last_line, bach, lo_bach_split, lo_lo_weyl, Class, Requirement};
use crate::tensor::Tensor;

/// Where an identity holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scope {
    /// Hypersurface dimension, `None` for any.
    pub dim: Option<usize>,
    pub class: Requirement,
}

impl Scope {
    const ALL: Scope = Scope { dim: None, class: Requirement::Any };
    const N3: Scope = Scope { dim: Some(3), class: Requirement::Any };
    const FLAT: Scope = Scope { dim: None, class: Requirement::Flat };
    const FLAT3: Scope = Scope { dim: Some(3), class: Requirement::Flat };
    const EINSTEIN3: Scope = Scope { dim: Some(3), class: Requirement::Einstein };

    /// `None` when in scope, otherwise the reason.
    pub fn check(&self, n: usize, class: &Class) -> Option<String> {
        if let Some(d) = self.dim {
            if d != n {
                return Some(format!("holds for n = {}", d));
            }
        }
        if !self.class.holds(class) {
            return Some(format!("needs background class {}", self.class.name()));
        }
        None
    }

    pub fn name(&self) -> String {
        match (self.dim, self.class) {
            (None, Requirement::Any) => "all".into(),
            (Some(d), Requirement::Any) => format!("n{}", d),
            (None, c) => c.name().into(),
            (Some(d), c) => format!("{}, n{}", c.name(), d),
        }
    }
}

/// Size of the two sides of an identity.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Balance {
    /// Largest component of `LHS - RHS`.
    pub raw: f64,
    /// Largest term, componentwise.
    pub scale: f64,
}

impl Balance {
    pub fn scalar(lhs: &[f64], rhs: &[f64]) -> Balance {
        let d: f64 = lhs.iter().sum::<f64>() - rhs.iter().sum::<f64>();
        let scale = lhs.iter().chain(rhs).fold(0.0f64, |m, t| m.max(t.abs()));
        Balance { raw: d.abs(), scale }
    }

    pub fn tensor(lhs: &[&Tensor], rhs: &[&Tensor]) -> Balance {
        let first = lhs.first().or(rhs.first()).expect("identity with no terms");
        let mut d = Tensor::zeros(first.dim(), first.rank());
        let mut scale = 0.0f64;
        for t in lhs {
            d.axpy(1.0, t);
            scale = scale.max(t.max_abs());
        }
        for t in rhs {
            d.axpy(-1.0, t);
            scale = scale.max(t.max_abs());
        }
        Balance { raw: d.max_abs(), scale }
    }

    /// Both displays of a multi-part identity at once.
    pub fn and(self, o: Balance) -> Balance {
        Balance { raw: self.raw.max(o.raw), scale: self.scale.max(o.scale) }
    }

    pub fn normalized(&self) -> f64 {
        self.raw / (1.0 + self.scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Every term is negligible, so agreement says nothing.
    Vacuous,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Vacuous => "vacuous",
            Status::Skipped => "skipped",
        }
    }

    pub fn ok(self) -> bool {
        !matches!(self, Status::Fail)
    }
}

/// Terms below this count as zero when deciding vacuity.
pub const VACUOUS: f64 = 1e-13;

pub type Evaluator = fn(&Geometry) -> Result<Balance>;

pub struct Entry {
    pub id: &'static str,
    pub scope: Scope,
    pub eval: Evaluator,
    /// A second sign convention recorded next to the main one.
    pub variant: Option<Evaluator>,
    /// Normalized residual at which the entry passes.
    pub tol: f64,
    pub about: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: &'static str,
    pub status: Status,
    pub balance: Balance,
    pub variant: Option<Balance>,
    /// Why the entry was skipped or could not be evaluated.
    pub note: Option<String>,
}

impl Entry {
    pub fn run(&self, geo: &Geometry, class: &Class, tol: f64) -> Outcome {
        let tol = tol.min(self.tol);
        if let Some(why) = self.scope.check(geo.n, class) {
            return Outcome { id: self.id, status: Status::Skipped, balance: Balance::default(), variant: None, note: Some(why) };
        }
        let b = match (self.eval)(geo) {
            Ok(b) => b,
            Err(e) => {
                return Outcome {
                    id: self.id,
                    status: Status::Fail,
                    balance: Balance::default(),
                    variant: None,
                    note: Some(format!("{}", e)),
                }
            }
        };
        let variant = self.variant.and_then(|f| f(geo).ok());
        let status = if b.scale < VACUOUS {
            Status::Vacuous
        } else if b.normalized() <= tol {
            Status::Pass
        } else {
            Status::Fail
        };
        Outcome { id: self.id, status, balance: b, variant, note: None }
    }
}

const DEFAULT_TOL: f64 = 1e-7;
const TIGHT_TOL: f64 = 1e-10;

macro_rules! entry {
    ($id:literal, $scope:expr, $f:expr, $about:literal) => {
        Entry { id: $id, scope: $scope, eval: $f, variant: None, tol: DEFAULT_TOL, about: $about }
    };
}

/// The full catalogue, in a fixed order.
pub fn catalog() -> Vec<Entry> {
    alloc::vec![
        entry!("id_basic", Scope::N3, id_basic, "δδ(ů²) through ∇δ(ů), |∇ů|², |δ(ů)|², |W̄₀|² and κ₁"),
        entry!("kappa1", Scope::N3, kappa1, "κ₁ = 3(ů²,P) + J|ů|²"),
        entry!("kappa1_flat", Scope::FLAT3, kappa1_flat, "κ₁ = 3H tr(L³) - |L|⁴ in flat space"),
        entry!("diff_simple", Scope::N3, diff_simple, "κ₁ - κ₂ = ů^{ij}∇^k W̄_{kij0}"),
        entry!("laplace_L", Scope::N3, laplace_l, "(ů,Δ(ů)) through Hess(H), P, P̄₀ and W̄₀"),
        entry!("pre_simons", Scope::ALL, pre_simons, "commuting the second derivatives of L"),
        entry!("pre_simons_trace", Scope::ALL, pre_simons_trace, "Δ(L) through Hess(H) and curvature"),
        entry!("simons_full", Scope::ALL, simons_full, "Simons identity for ∇∇L"),
        entry!("simons_trace", Scope::ALL, simons_trace, "traced Simons identity for Δ(L)"),
        entry!("simons_flat", Scope::FLAT, simons_flat, "Simons identities in flat space"),
        Entry {
            id: "new3a",
            scope: Scope::N3,
            eval: new3a,
            variant: Some(new3a_flipped),
            tol: DEFAULT_TOL,
            about: "LOP((ů²)∘) through (ů,Δů), |∇ů|², |δ(ů)|², J, W̄₀; variant flips the |W̄₀|² sign",
        },
        entry!("diff_key", Scope::N3, diff_key, "Δ(|ů|²) - 2δδ(ů²) in a general background"),
        entry!("basic_div", Scope::FLAT3, basic_div, "Δ(|ů|²)/2 - δδ(ů²) in flat space"),
        Entry {
            id: "cm_tracefree",
            scope: Scope::N3,
            eval: cm_tracefree,
            variant: None,
            tol: TIGHT_TOL,
            about: "trace-free Codazzi-Mainardi equation",
        },
        entry!("bianchi_r0", Scope::ALL, bianchi_r0, "normal derivative of the Einstein tensor"),
        entry!("nabla2G", Scope::N3, nabla2g, "second normal derivative of the Einstein tensor"),
        entry!("del_nabla", Scope::ALL, del_nabla, "δ(∇̄₀(Ric̄)₀) through the second Bianchi identity"),
        entry!("deldel", Scope::N3, deldel, "δδ(Ric̄) through intrinsic and extrinsic terms"),
        entry!("deldel2", Scope::ALL, deldel2, "product rule for δδ(Hů)"),
        entry!("van_term", Scope::N3, van_term, "Ḡ quadratic terms reduce to Weyl terms"),
        entry!("help2", Scope::N3, help2, "splitting L into H and ů against Ric̄"),
        entry!("fh", Scope::N3, fh, "6(ů²,P) - 2|ů|²J in a general background"),
        entry!("lw_t", Scope::N3, lw_t, "ambient versus intrinsic divergence of W̄₀"),
        entry!("hl1", Scope::N3, hl1, "normal derivative of R̄₀ᵢⱼ₀ split into Ricci and Weyl"),
        entry!("bach_deco", Scope::N3, bach_deco, "(ů,B) split into Weyl terms"),
        entry!("gauss_J", Scope::N3, gauss_j, "J̄ - P̄₀₀ - J = |ů|²/4 - 3H²/2"),
        Entry {
            id: "trace_id",
            scope: Scope::N3,
            eval: trace_id,
            variant: None,
            tol: TIGHT_TOL,
            about: "|ů|⁴ = 2 tr(ů⁴)",
        },
        entry!("surprise", Scope::N3, surprise, "δ(∇̄₀(Ric̄)₀) in intrinsic terms, both forms"),
        entry!("surp2_einstein", Scope::EINSTEIN3, surp2_einstein, "Weyl divergence identity on Einstein backgrounds"),
        entry!("star_equiv", Scope::N3, star_equiv, "invariant and expanded forms of the Weyl remainder"),
        entry!("last_line", Scope::N3, last_line, "Laplacian terms of the volume formula"),
        entry!("fialkov", Scope::N3, fialkov, "𝓕 = ů² - |ů|²h/4 + 𝒲"),
        entry!("gauss_codazzi", Scope::ALL, gauss_codazzi, "Codazzi-Mainardi: ∇_j L_ik - ∇_i L_jk = R̄_ijk0"),
    ]
}

pub fn find(id: &str) -> Option<Entry> {
    catalog().into_iter().find(|e| e.id == id)
}

/// Run every entry at one point.
pub fn run_all(geo: &Geometry, tol: f64) -> Vec<Outcome> {
    let class = Class::of(geo);
    catalog().iter().map(|e| e.run(geo, &class, tol)).collect()
}

fn schouten(geo: &Geometry) -> Result<&Tensor> {
    geo.surface
        .schouten
        .as_ref()
        .ok_or_else(|| crate::Error::Scope("intrinsic Schouten tensor needs n > 2".into()))
}

fn sum2(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += f(i, j);
        }
    }
    acc
}

fn id_basic(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let lo_graddiv = s.lo.dot(&s.grad_div_lo);
    Ok(Balance::scalar(
        &[s.divdiv_lo2],
        &[2.0 * lo_graddiv, s.grad_lo.norm2(), 0.5 * s.div_lo.norm2(), -0.5 * s.w0.norm2(), s.kappa1],
    ))
}

fn kappa1(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(&[s.kappa1], &[3.0 * s.lo2.dot(schouten(geo)?), s.j * s.lo_norm2]))
}

fn kappa1_flat(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let h = s.mean;
    let a = Balance::scalar(&[s.kappa1], &[3.0 * h * s.tr_l3, -s.l_norm2 * s.l_norm2]);
    let b = Balance::scalar(&[s.kappa1], &[3.0 * h * s.tr_lo3, 3.0 * h * h * s.lo_norm2, -s.lo_norm2 * s.lo_norm2]);
    Ok(a.and(b))
}

fn diff_simple(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(&[s.kappa1, -s.kappa2], &[s.lo.dot(&s.div_w0)]))
}

fn laplace_l(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(
        &[s.lo.dot(&s.lap_lo)],
        &[
            3.0 * s.lo.dot(&s.hess_h),
            3.0 * s.lo2.dot(schouten(geo)?),
            s.j * s.lo_norm2,
            3.0 * s.lo.dot(&s.grad_p0),
            -s.lo.dot(&s.div_w0),
        ],
    ))
}

fn pre_simons(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let s = &geo.surface;
    let (hl, gr, r, l) = (&s.hess_l, &s.grad_r0, &s.riem, &s.l);
    // [k][l][i][j]
    let lhs = hl.clone();
    let t1 = Tensor::from_fn(n, 4, |x| hl.get(&[x[2], x[3], x[0], x[1]]));
    let t2 = Tensor::from_fn(n, 4, |x| -gr.get(&[x[2], x[0], x[3], x[1]]));
    let t3 = Tensor::from_fn(n, 4, |x| -gr.get(&[x[0], x[1], x[2], x[3]]));
    let t4 = Tensor::from_fn(n, 4, |x| {
        let (k, ll, i, j) = (x[0], x[1], x[2], x[3]);
        (0..n).map(|m| r.get(&[k, i, m, ll]) * l.get(&[m, j]) + r.get(&[k, i, m, j]) * l.get(&[ll, m])).sum()
    });
    Ok(Balance::tensor(&[&lhs], &[&t1, &t2, &t3, &t4]))
}

fn pre_simons_trace(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let nn = n as f64;
    let s = &geo.surface;
    let (gr, r, l) = (&s.grad_r0, &s.riem, &s.l);
    let t1 = s.hess_h.scale(nn);
    let t2 = Tensor::from_fn(n, 2, |x| -(0..n).map(|k| gr.get(&[k, k, x[0], x[1]])).sum::<f64>());
    let t3 = s.grad_ric0.clone();
    let t4 = Tensor::from_fn(n, 2, |x| {
        let (i, j) = (x[0], x[1]);
        sum2(n, |k, m| r.get(&[i, k, k, m]) * l.get(&[j, m]) - r.get(&[k, i, j, m]) * l.get(&[k, m]))
    });
    Ok(Balance::tensor(&[&s.lap_l], &[&t1, &t2, &t3, &t4]))
}

/// Tangential components of an ambient frame tensor; `t.get(&[i+1,..])`.
fn amb(t: &Tensor, idx: &[usize]) -> f64 {
    let shifted: Vec<usize> = idx.iter().map(|&i| if i == usize::MAX { 0 } else { i + 1 }).collect();
    t.get(&shifted)
}

const O: usize = usize::MAX;

fn simons_full(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let s = &geo.surface;
    let a = &geo.ambient;
    let (hl, l, l2) = (&s.hess_l, &s.l, &s.l2);
    let (rb, nr) = (&a.riem, &a.nabla_riem);
    // [i][j][k][l]
    let lhs = hl.clone();
    let t1 = Tensor::from_fn(n, 4, |x| hl.get(&[x[2], x[3], x[0], x[1]]));
    let t2 = Tensor::from_fn(n, 4, |x| {
        let (i, j, k, ll) = (x[0], x[1], x[2], x[3]);
        l.get(&[i, j]) * l2.get(&[k, ll]) - l.get(&[k, ll]) * l2.get(&[i, j]) + l.get(&[i, ll]) * l2.get(&[j, k])
            - l.get(&[j, k]) * l2.get(&[i, ll])
    });
    let t3 = Tensor::from_fn(n, 4, |x| {
        let (i, j, k, ll) = (x[0], x[1], x[2], x[3]);
        (0..n)
            .map(|m| {
                -l.get(&[i, m]) * amb(rb, &[j, k, ll, m]) - l.get(&[j, m]) * amb(rb, &[i, k, ll, m])
                    + l.get(&[k, m]) * amb(rb, &[ll, i, j, m])
                    + l.get(&[ll, m]) * amb(rb, &[k, i, j, m])
            })
            .sum()
    });
    let t4 = Tensor::from_fn(n, 4, |x| {
        let (i, j, k, ll) = (x[0], x[1], x[2], x[3]);
        l.get(&[i, j]) * amb(rb, &[O, k, ll, O]) - l.get(&[k, ll]) * amb(rb, &[O, i, j, O])
            + amb(nr, &[i, k, j, ll, O])
            + amb(nr, &[k, ll, i, j, O])
    });
    Ok(Balance::tensor(&[&lhs], &[&t1, &t2, &t3, &t4]))
}

fn simons_trace(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let nn = n as f64;
    let s = &geo.surface;
    let a = &geo.ambient;
    let (l, l2, h) = (&s.l, &s.l2, s.mean);
    let (rb, nr) = (&a.riem, &a.nabla_riem);
    let t1 = s.hess_h.scale(nn);
    let t2 = Tensor::from_fn(n, 2, |x| {
        let (i, j) = (x[0], x[1]);
        nn * h * l2.get(&[i, j]) - l.get(&[i, j]) * s.l_norm2
    });
    let t3 = Tensor::from_fn(n, 2, |x| {
        let (i, j) = (x[0], x[1]);
        sum2(n, |k, m| {
            l.get(&[m, j]) * amb(rb, &[i, k, k, m]) + l.get(&[i, m]) * amb(rb, &[j, k, k, m])
                - 2.0 * l.get(&[k, m]) * amb(rb, &[k, i, j, m])
        })
    });
    let t4 = Tensor::from_fn(n, 2, |x| {
        let (i, j) = (x[0], x[1]);
        nn * h * amb(rb, &[O, i, j, O]) - l.get(&[i, j]) * a.ric00()
            + (0..n).map(|k| amb(nr, &[k, i, k, j, O]) + amb(nr, &[i, j, k, k, O])).sum::<f64>()
    });
    Ok(Balance::tensor(&[&s.lap_l], &[&t1, &t2, &t3, &t4]))
}

fn simons_flat(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let nn = n as f64;
    let s = &geo.surface;
    let (hl, l, l2) = (&s.hess_l, &s.l, &s.l2);
    let t1 = Tensor::from_fn(n, 4, |x| hl.get(&[x[2], x[3], x[0], x[1]]));
    let t2 = Tensor::from_fn(n, 4, |x| {
        let (i, j, k, ll) = (x[0], x[1], x[2], x[3]);
        l.get(&[i, j]) * l2.get(&[k, ll]) - l.get(&[k, ll]) * l2.get(&[i, j]) + l.get(&[i, ll]) * l2.get(&[k, j])
            - l.get(&[k, j]) * l2.get(&[i, ll])
    });
    let first = Balance::tensor(&[hl], &[&t1, &t2]);
    let second = Balance::tensor(&[&s.lap_l], &[&s.hess_h.scale(nn), &l2.scale(nn * s.mean), &l.scale(-s.l_norm2)]);
    let lap_l2 = s.lap_lo_norm2 + nn * s.lap_h2;
    let third = Balance::scalar(
        &[0.5 * lap_l2],
        &[nn * l.dot(&s.hess_h), s.grad_l.norm2(), nn * s.mean * s.tr_l3, -s.l_norm2 * s.l_norm2],
    );
    Ok(first.and(second).and(third))
}

fn new3a_parts(geo: &Geometry, w0_sign: f64) -> Result<Balance> {
    let s = &geo.surface;
    let p = schouten(geo)?;
    Ok(Balance::scalar(
        &[s.divdiv_lo2_tf, p.dot(&s.lo2_tf)],
        &[
            2.0 / 3.0 * s.lo.dot(&s.lap_lo),
            s.grad_lo.norm2() / 3.0,
            0.5 * s.div_lo.norm2(),
            -2.0 / 3.0 * s.j * s.lo_norm2,
            4.0 / 3.0 * s.lo.dot(&s.div_w0),
            -0.5 * w0_sign * s.w0.norm2(),
        ],
    ))
}

fn new3a(geo: &Geometry) -> Result<Balance> {
    new3a_parts(geo, 1.0)
}

fn new3a_flipped(geo: &Geometry) -> Result<Balance> {
    new3a_parts(geo, -1.0)
}

fn diff_key(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(
        &[s.lap_lo_norm2, -2.0 * s.divdiv_lo2],
        &[
            -2.0 * s.lo.dot(&s.hess_h),
            -2.0 * s.lo.dot(&s.grad_p0),
            -s.div_lo.norm2(),
            -2.0 * s.lo.dot(&s.div_w0),
            s.w0.norm2(),
        ],
    ))
}

fn basic_div(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(&[0.5 * s.lap_lo_norm2, -s.divdiv_lo2], &[-s.lo.dot(&s.hess_h), -2.0 * s.dh.norm2()]))
}

fn cm_tracefree(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let s = &geo.surface;
    let (g, d) = (&s.grad_lo, &s.div_lo);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    // [k][i][j]
    let lhs = Tensor::from_fn(n, 3, |x| {
        let (k, i, j) = (x[0], x[1], x[2]);
        g.get(&[i, k, j]) - g.get(&[k, i, j]) - 0.5 * d.get(&[k]) * delta(i, j) + 0.5 * d.get(&[i]) * delta(k, j)
    });
    Ok(Balance::tensor(&[&lhs], &[&s.w0]))
}

fn gauss_codazzi(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let s = &geo.surface;
    let g = &s.grad_l;
    let lhs = Tensor::from_fn(n, 3, |x| g.get(&[x[1], x[0], x[2]]) - g.get(&[x[0], x[1], x[2]]));
    Ok(Balance::tensor(&[&lhs], &[&s.r0]))
}

fn bianchi_r0(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let nn = geo.n as f64;
    Ok(Balance::scalar(
        &[a.d0_ric00(), -0.5 * a.scal_p()],
        &[-s.div_ric0, -nn * s.mean * a.ric00(), s.l.dot(&s.ric_t)],
    ))
}

fn nabla2g(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let h = s.mean;
    let ric00 = a.ric00();
    let div_d0 = s.div_d0ric0.ok_or_else(|| crate::Error::order(5, geo.order, "δ(∇̄₀(Ric̄)₀)"))?;
    Ok(Balance::scalar(
        &[a.d00_ric00()?, -0.5 * a.scal_pp()?],
        &[
            -4.0 * h * a.d0_ric00(),
            h * a.scal_p(),
            2.0 * s.lo.dot(&s.grad_ric0),
            -div_d0,
            s.lo.dot(&a.d0_ric_t()),
            h * s.div_ric0,
            -2.0 * s.dh.dot(&s.ric0),
            2.0 * s.div_lo.dot(&s.ric0),
            -s.div_loric0,
            s.l_norm2 * ric00,
            -s.l2.dot(&s.ric_t),
            ric00 * ric00,
            -a.g_normal().dot(&s.ric_t),
        ],
    ))
}

fn del_nabla(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let nn = geo.n as f64;
    let div_d0 = s.div_d0ric0.ok_or_else(|| crate::Error::order(5, geo.order, "δ(∇̄₀(Ric̄)₀)"))?;
    Ok(Balance::scalar(
        &[div_d0],
        &[0.5 * s.lap_scal_bar, -nn * s.div_hric0, -s.div_lric0, -s.divdiv_ric_t],
    ))
}

fn deldel(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let nn = geo.n as f64;
    let lap_j = s.lap_j.ok_or_else(|| crate::Error::order(5, geo.order, "Δ(J)"))?;
    Ok(Balance::scalar(
        &[s.divdiv_ric_t],
        &[
            2.0 * lap_j,
            s.lap_scal_bar / (2.0 * nn),
            -s.lap_h2,
            -2.0 * s.divdiv_hlo,
            2.0 * s.divdiv_lo2,
            -0.5 * s.lap_lo_norm2,
            2.0 * s.divdiv_what,
        ],
    ))
}

fn deldel2(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(
        &[s.divdiv_hlo],
        &[s.lo.dot(&s.hess_h), 2.0 * s.dh.dot(&s.div_lo), s.mean * s.divdiv_lo],
    ))
}

fn van_term(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let gbar = a.g_normal();
    let ric00 = a.ric00();
    Ok(Balance::scalar(
        &[-ric00 * ric00, -gbar.dot(&s.ric_t), 2.0 * gbar.norm2(), 2.0 * ric00 * a.jbar],
        &[2.0 * s.pbar_t.dot(&s.what), 2.0 * s.what.norm2()],
    ))
}

fn help2(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let h = s.mean;
    let ric00 = a.ric00();
    let first = Balance::scalar(
        &[s.l_norm2 * ric00, -s.l2.dot(&s.ric_t)],
        &[
            s.lo_norm2 * ric00,
            -s.lo2.dot(&s.ric_t),
            -2.0 * h * s.lo.dot(&s.ric_t),
            4.0 * h * h * ric00,
            -6.0 * h * h * a.jbar,
        ],
    );
    let second = Balance::scalar(&[s.l.dot(&s.ric_t)], &[s.lo.dot(&s.ric_t), 6.0 * h * a.jbar, -h * ric00]);
    Ok(first.and(second))
}

fn fh(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let lo2n = s.lo_norm2;
    Ok(Balance::scalar(
        &[6.0 * s.lo2.dot(schouten(geo)?), -2.0 * lo2n * s.j],
        &[
            6.0 * s.mean * s.tr_lo3,
            -lo2n * lo2n,
            6.0 * s.lo2.dot(&s.pbar_t),
            -2.0 * lo2n * a.jbar,
            2.0 * lo2n * a.p00(),
            -6.0 * s.lo2.dot(&s.what),
        ],
    ))
}

fn lw_t(geo: &Geometry) -> Result<Balance> {
    let n = geo.n;
    let s = &geo.surface;
    let nw = &geo.ambient.nabla_weyl;
    let lo = &s.lo;
    let mut ambient = 0.0;
    let mut intrinsic = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                ambient += lo.get(&[i, j]) * amb(nw, &[k, i, k, j, O]);
                intrinsic += lo.get(&[i, j]) * s.grad_w0.get(&[k, i, k, j]);
            }
        }
    }
    Ok(Balance::scalar(
        &[ambient],
        &[intrinsic, s.lo2.dot(&s.what), -3.0 * s.mean * lo.dot(&s.what), lo_lo_weyl(geo)],
    ))
}

fn hl1(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let first = Balance::scalar(
        &[s.lo.dot(&a.d0_ric_t()), 2.0 * s.lo.dot(&a.d0_w0ij0())],
        &[2.0 * s.lo.dot(&a.d0_r0ij0())],
    );
    let second = Balance::scalar(&[s.lo.dot(&s.ric_t), 2.0 * s.lo.dot(&s.what)], &[2.0 * s.lo.dot(&a.g_normal())]);
    Ok(first.and(second))
}

fn bach_deco(geo: &Geometry) -> Result<Balance> {
    let b = bach(geo)?;
    let split = lo_bach_split(geo);
    let lhs = geo.surface.lo.dot(&b);
    let mut bal = Balance::scalar(&[lhs], &[split.sum()]);
    bal.scale = bal.scale.max(split.scale());
    Ok(bal)
}

fn gauss_j(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    Ok(Balance::scalar(&[a.jbar, -a.p00(), -s.j], &[0.25 * s.lo_norm2, -1.5 * s.mean * s.mean]))
}

fn trace_id(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(&[s.lo_norm2 * s.lo_norm2], &[2.0 * s.tr_lo4]))
}

fn surprise(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let nn = geo.n as f64;
    let div_d0 = s.div_d0ric0.ok_or_else(|| crate::Error::order(5, geo.order, "δ(∇̄₀(Ric̄)₀)"))?;
    let lap_j = s.lap_j.ok_or_else(|| crate::Error::order(5, geo.order, "Δ(J)"))?;
    let lap_jbar = s.lap_scal_bar / (2.0 * nn);
    let _ = a;
    let first = Balance::scalar(
        &[div_d0],
        &[
            2.0 * (lap_jbar - lap_j),
            -3.0 * s.div_hric0,
            -s.div_lric0,
            s.lap_h2,
            2.0 * s.divdiv_hlo,
            -2.0 * s.divdiv_lo2,
            0.5 * s.lap_lo_norm2,
            -2.0 * s.divdiv_what,
        ],
    );
    let second = Balance::scalar(
        &[div_d0],
        &[
            2.0 * s.lap_p00,
            s.lap_lo_norm2,
            -2.0 * s.lap_h2,
            -3.0 * s.div_hric0,
            -s.div_lric0,
            2.0 * s.divdiv_hlo,
            -2.0 * s.divdiv_lo2,
            -2.0 * s.divdiv_what,
        ],
    );
    Ok(first.and(second))
}

fn surp2_einstein(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    Ok(Balance::scalar(&[-2.0 * s.lo.dot(&s.div_w0), s.w0.norm2(), -2.0 * s.divdiv_what], &[]))
}

fn star_equiv(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let a = &geo.ambient;
    let b = bach(geo)?;
    Ok(Balance::scalar(
        &[-2.0 * s.lo.dot(&b), 14.0 * s.lo2.dot(&s.what), -2.0 * lo_lo_weyl(geo)],
        &[
            -2.0 * s.lo.dot(&a.d0_w0ij0()),
            // ů^{ij} ∇^k W̄_{ikj0} = -ů^{ij} ∇^k W̄_{kij0}
            -4.0 * s.lo.dot(&s.div_w0),
            -4.0 * s.mean * s.lo.dot(&s.what),
            16.0 * s.lo2.dot(&s.what),
        ],
    ))
}

fn last_line(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let lhs = b3_last_line(geo);
    let mut bal = Balance::scalar(
        &[lhs.sum()],
        &[
            s.lap_lo_norm2 / 12.0,
            0.5 * s.lo.dot(&s.hess_h),
            s.lap_p00 / 6.0,
            0.5 * s.dh.dot(&s.ric0),
            s.dh.norm2(),
        ],
    );
    bal.scale = bal.scale.max(lhs.scale());
    Ok(bal)
}

fn fialkov(geo: &Geometry) -> Result<Balance> {
    let s = &geo.surface;
    let f = s.fialkov.as_ref().ok_or_else(|| crate::Error::Scope("Fialkov tensor needs n > 2".into()))?;
    let id = Tensor::identity(geo.n).scale(-0.25 * s.lo_norm2);
    Ok(Balance::tensor(&[f], &[&s.lo2, &id, &s.what]))
}
