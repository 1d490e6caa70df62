//! Normal expansions: Taylor coefficients of `h_r`, volume coefficients and
//! the coefficients of the approximate singular Yamabe defining function.
//!
//! [`Expansion`] evaluates closed formulas from the point data of a
//! [`Geometry`]. [`Remainder`] solves the singular Yamabe equation directly in
//! normal coordinates and reads off the obstruction, which makes it an
//! independent reference for everything that is built from closed formulas.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::ambient::MetricField;
use crate::error::{Error, Result};
use crate::fermi::FermiChart;
use crate::field::{mat_det, mat_inverse, JetTensor};
use crate::geometry::Geometry;
use crate::hypersurface::Embedding;
use crate::jets::Jet;
use crate::tensor::Tensor;

fn tr(a: &Tensor) -> f64 {
    a.trace()
}

fn tr2(a: &Tensor, b: &Tensor) -> f64 {
    a.matmul(b).trace()
}

fn tr3(a: &Tensor, b: &Tensor, c: &Tensor) -> f64 {
    a.matmul(b).matmul(c).trace()
}

/// Volume coefficients from the Taylor coefficients `h_(1) .. h_(3)` and `tr h_(4)`.
pub fn volume_from_traces(h1: &Tensor, h2: &Tensor, h3: &Tensor, tr_h4: Option<f64>) -> Vec<f64> {
    let t1 = tr(h1);
    let t2 = tr(h2);
    let t3 = tr(h3);
    let t11 = tr2(h1, h1);
    let t12 = tr2(h1, h2);
    let t111 = tr3(h1, h1, h1);
    let v1 = t1 / 2.0;
    let v2 = (t1 * t1 + 4.0 * t2 - 2.0 * t11) / 8.0;
    let v3 = (libm::pow(t1, 3.0) + 12.0 * t1 * t2 + 24.0 * t3 - 6.0 * t1 * t11 - 24.0 * t12 + 8.0 * t111) / 48.0;
    let mut v = vec![v1, v2, v3];
    if let Some(t4) = tr_h4 {
        let t13 = tr2(h1, h3);
        let t22 = tr2(h2, h2);
        let t112 = tr3(h1, h1, h2);
        let h11 = h1.matmul(h1);
        let t1111 = tr2(&h11, &h11);
        let v4 = libm::pow(t1, 4.0) + 24.0 * t1 * t1 * t2 + 48.0 * t2 * t2 + 96.0 * t1 * t3 + 192.0 * t4
            - 12.0 * t1 * t1 * t11
            - 48.0 * t2 * t11
            + 12.0 * t11 * t11
            - 96.0 * t1 * t12
            - 192.0 * t13
            - 96.0 * t22
            + 32.0 * t1 * t111
            + 192.0 * t112
            - 48.0 * t1111;
        v.push(v4 / 384.0);
    }
    v
}

/// Elementary symmetric functions of the eigenvalues of `L`, the volume
/// coefficients of a flat background.
pub fn elementary(l: &Tensor) -> Vec<f64> {
    let p1 = l.trace();
    let l2 = l.matmul(l);
    let p2 = l2.trace();
    let p3 = l2.matmul(l).trace();
    let p4 = l2.dot(&l2.transpose());
    vec![
        p1,
        (p1 * p1 - p2) / 2.0,
        (libm::pow(p1, 3.0) - 3.0 * p1 * p2 + 2.0 * p3) / 6.0,
        (libm::pow(p1, 4.0) - 6.0 * p1 * p1 * p2 + 3.0 * p2 * p2 + 8.0 * p1 * p3 - 6.0 * p4) / 24.0,
    ]
}

/// Closed formulas for the normal expansion at one point.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub n: usize,
    pub h1: Tensor,
    pub h2: Tensor,
    pub h3: Tensor,
    /// Needs second normal derivatives of the ambient Ricci tensor.
    pub tr_h4: Option<f64>,
    /// `v_1 .. v_4` from the trace relations.
    pub v_trace: Vec<f64>,
    /// `v_1 .. v_4` from curvature formulas.
    pub v_closed: Vec<f64>,
    /// `v_k` for a flat background, `e_k(L)`.
    pub v_flat: Vec<f64>,
    /// `σ_(2), σ_(3)` and, when `n != 2`, `σ_(4)`.
    pub sigma: Vec<f64>,
    /// Flat-background closed forms of the same coefficients.
    pub sigma_flat: Vec<f64>,
    pub jbar: f64,
    pub jbar_p: f64,
    pub jbar_pp: Option<f64>,
    /// Numerator of the `σ_(4)` pole at `n = 2`.
    pub residue: f64,
}

impl Expansion {
    pub fn new(geo: &Geometry) -> Result<Expansion> {
        let s = &geo.surface;
        let a = &geo.ambient;
        let n = geo.n;
        let nn = n as f64;
        let gbar = a.g_normal();
        let d0r = a.d0_r0ij0();
        let l = &s.l;
        let lo = &s.lo;
        let h = s.mean;
        let lg = l.matmul(&gbar);
        let gl = gbar.matmul(l);
        let h1 = l * 2.0;
        let h2 = &s.l2 - &gbar;
        let h3 = (&(&d0r * -1.0) - &(&(&lg + &gl) * 2.0)) * (1.0 / 3.0);
        let d00 = a.d00_ric00().ok();
        let tr_h4 =
            d00.map(|d| (-d - 6.0 * l.dot(&d0r) - 4.0 * s.l2.dot(&gbar) + 4.0 * gbar.norm2()) / 12.0);
        let v_trace = volume_from_traces(&h1, &h2, &h3, tr_h4);

        let ric00 = a.ric00();
        let d0ric = a.d0_ric00();
        let lo2n = s.lo_norm2;
        let v1 = nn * h;
        let v2 = 0.5 * (-ric00 - lo2n + nn * (nn - 1.0) * h * h);
        let v3 = (-d0ric + 2.0 * lo.dot(&gbar) - (3.0 * nn - 2.0) * h * ric00 + 2.0 * s.tr_lo3
            - 3.0 * (nn - 2.0) * h * lo2n
            + nn * (nn - 1.0) * (nn - 2.0) * libm::pow(h, 3.0))
            / 6.0;
        let v_flat = elementary(l);
        let mut v_closed = vec![v1, v2, v3];
        if let Some(d) = d00 {
            let v4 = -d + 2.0 * l.dot(&d0r) - 4.0 * nn * h * d0ric + 3.0 * ric00 * ric00 - 2.0 * gbar.norm2()
                + 8.0 * nn * h * l.dot(&gbar)
                - 8.0 * s.l2.dot(&gbar)
                + 6.0 * lo2n * ric00
                - 6.0 * nn * (nn - 1.0) * h * h * ric00
                + 24.0 * v_flat[3];
            v_closed.push(v4 / 24.0);
        }

        let jbar = a.jbar;
        let jbar_p = a.jbar_p();
        let jbar_pp = a.jbar_pp().ok();
        let lap_s2 = 0.5 * s.lap_h;
        let s2 = v1 / (2.0 * nn);
        let s3 = 2.0 * v2 / (3.0 * (nn - 1.0)) - v1 * v1 / (3.0 * nn) + jbar / (3.0 * (nn - 1.0));
        let mut sigma = vec![s2, s3];
        let num4 = 0.75 * v3 - (9.0 * nn * nn - 20.0 * nn + 7.0) / (12.0 * nn * (nn - 1.0)) * v1 * v2
            + (6.0 * nn * nn - 11.0 * nn + 1.0) / (24.0 * nn * nn) * libm::pow(v1, 3.0)
            + (2.0 * nn - 1.0) / (6.0 * nn * (nn - 1.0)) * v1 * jbar
            + 0.25 * jbar_p
            + 0.25 * lap_s2;
        let mut sigma_flat = vec![h / 2.0, -lo2n / (3.0 * (nn - 1.0))];
        if n != 2 {
            sigma.push(num4 / (nn - 2.0));
            sigma_flat.push(
                (6.0 * s.tr_lo3 + (7.0 * nn - 11.0) / (nn - 1.0) * h * lo2n + 3.0 * s.lap_h) / (24.0 * (nn - 2.0)),
            );
        }
        check_volume(&v_trace, &v_closed)?;
        let residue = 0.75 * v3 + libm::pow(v1, 3.0) / 32.0 - v1 * v2 / 8.0 + 0.25 * v1 * jbar + 0.25 * jbar_p + 0.25 * lap_s2;

        Ok(Expansion {
            n,
            h1,
            h2,
            h3,
            tr_h4,
            v_trace,
            v_closed,
            v_flat,
            sigma,
            sigma_flat,
            jbar,
            jbar_p,
            jbar_pp,
            residue,
        })
    }
}

/// Agreement required between the two volume-coefficient paths.
pub const VOLUME_TOL: f64 = 1e-8;

fn check_volume(trace: &[f64], closed: &[f64]) -> Result<()> {
    for (k, (a, b)) in trace.iter().zip(closed).enumerate() {
        let d = (a - b).abs();
        if d > VOLUME_TOL * (1.0 + a.abs().max(b.abs())) {
            return Err(Error::Mismatch { what: format!("volume coefficient v_{} paths", k + 1), residual: d });
        }
    }
    Ok(())
}

impl Expansion {
    /// `σ_(4)`, which has a pole at `n = 2`.
    pub fn sigma4(&self) -> Result<f64> {
        match self.sigma.get(2) {
            Some(&s) => Ok(s),
            None => Err(Error::Pole { what: "σ_(4)".into(), dim: self.n, residue: self.residue }),
        }
    }
}

/// First-order change of the Laplacian along the normal flow, `Δ' u`.
pub fn lap_prime(geo: &Geometry, hess_u: &Tensor, du: &Tensor) -> f64 {
    let s = &geo.surface;
    let nn = geo.n as f64;
    -2.0 * s.l.dot(hess_u) - nn * s.dh.dot(du) - 2.0 * s.ric0.dot(du)
}

/// First-order change of the divergence along the normal flow, `δ' ω`.
pub fn div_prime(geo: &Geometry, grad_w: &Tensor, w: &Tensor) -> f64 {
    let s = &geo.surface;
    let nn = geo.n as f64;
    -2.0 * s.l.dot(grad_w) - 2.0 * s.div_l.dot(w) + nn * s.dh.dot(w)
}

fn shifted(j: &Jet, m: usize, k: usize, order: usize) -> Jet {
    let mut out = j.embed(m);
    for _ in 0..k {
        out = out.mul_var(m - 1);
    }
    out.truncate(order)
}

/// `Δ_h f` for a metric field given with its inverse and volume density,
/// differentiating in the first `n` variables only.
fn laplacian(n: usize, hinv: &JetTensor, vol: &Jet, f: &Jet) -> Result<Jet> {
    let df: Vec<Jet> = (0..n).map(|j| f.partial(j)).collect::<Result<_>>()?;
    let mut acc: Option<Jet> = None;
    for i in 0..n {
        let mut flux = Jet::zero(f.arity(), df[0].order());
        for (j, dj) in df.iter().enumerate() {
            flux = flux + hinv.get(&[i, j]) * dj;
        }
        let d = (&flux * vol).partial(i)?;
        acc = Some(match acc {
            None => d,
            Some(a) => a + d,
        });
    }
    acc.unwrap().div(vol)
}

fn divergence(n: usize, hinv: &JetTensor, vol: &Jet, w: &[Jet]) -> Result<Jet> {
    let mut acc: Option<Jet> = None;
    for i in 0..n {
        let mut flux = Jet::zero(w[0].arity(), w[0].order());
        for (j, wj) in w.iter().enumerate() {
            flux = flux + hinv.get(&[i, j]) * wj;
        }
        let d = (&flux * vol).partial(i)?;
        acc = Some(match acc {
            None => d,
            Some(a) => a + d,
        });
    }
    acc.unwrap().div(vol)
}

/// The singular Yamabe operator `S(g, σ) = |dσ|² - 2σ(Δσ + J̄σ)/(n+1)` in normal
/// coordinates, for `σ = r τ`.
struct Yamabe<'a> {
    n: usize,
    order: usize,
    chart: &'a FermiChart,
    vol: Jet,
    q: Jet,
}

impl<'a> Yamabe<'a> {
    fn new(chart: &'a FermiChart) -> Result<Yamabe<'a>> {
        let n = chart.n;
        let vol = mat_det(&chart.h)?.sqrt()?;
        let hp = chart.h.map(|j| j.partial(n).expect("order"));
        let mut q = Jet::zero(n + 1, hp.order());
        for i in 0..n {
            for j in 0..n {
                q = q + chart.hinv.get(&[i, j]) * hp.get(&[j, i]);
            }
        }
        Ok(Yamabe { n, order: chart.order - 1, chart, vol, q: q.scale(0.5) })
    }

    fn apply(&self, tau: &Jet) -> Result<Jet> {
        let n = self.n;
        let nn = n as f64;
        let r = n;
        let sigma = tau.mul_var(r);
        let ds = sigma.partial(r)?;
        let mut s = &ds * &ds;
        let dt: Vec<Jet> = (0..n).map(|i| tau.partial(i)).collect::<Result<_>>()?;
        let mut grad2 = Jet::zero(n + 1, dt[0].order());
        for i in 0..n {
            for j in 0..n {
                grad2 = grad2 + &(self.chart.hinv.get(&[i, j]) * &dt[i]) * &dt[j];
            }
        }
        s = s + grad2.mul_var(r).mul_var(r);
        let lap = laplacian(n, &self.chart.hinv, &self.vol, tau)?;
        let inner = ds.partial(r)? + &self.q * &ds + lap.mul_var(r);
        s = s + (tau * &inner).mul_var(r).scale(-2.0 / (nn + 1.0));
        let sc = (&(tau * tau) * &self.chart.scal).mul_var(r).mul_var(r);
        s = s + sc.scale(-1.0 / (nn * (nn + 1.0)));
        Ok(s.truncate(self.order))
    }
}

/// Largest admissible Taylor coefficient of `S - 1` below `r^(n+1)`.
pub const SERIES_TOL: f64 = 1e-8;

/// Obstruction read off from solving the singular Yamabe equation in normal
/// coordinates, once with the closed coefficient formulas and once by
/// recursion on the Taylor coefficients.
#[derive(Clone, Debug)]
pub struct Remainder {
    pub n: usize,
    /// Remainder with coefficients from the volume-coefficient formulas.
    pub parametric: f64,
    pub recursive: f64,
    /// `σ_(2) ..= σ_(n+1)` at the base point, recursive solve.
    pub sigma: Vec<f64>,
    pub sigma_parametric: Vec<f64>,
    /// Largest Taylor coefficient of `S - 1` below `r^(n+1)`, per solve.
    pub low_parametric: f64,
    pub low_recursive: f64,
    /// Volume coefficients `v_1 ..= v_(n+1)` from the normal-coordinate metric.
    pub volume: Vec<f64>,
    pub chart: FermiChart,
}

impl Remainder {
    pub fn new(metric: &MetricField, emb: &Embedding, x0: &[f64]) -> Result<Remainder> {
        let n = emb.n();
        if !(2..=3).contains(&n) {
            return Err(Error::Scope(alloc::format!("obstruction solve needs n = 2 or 3, got {}", n)));
        }
        let k = n + 2;
        let chart = FermiChart::new(metric, emb, x0, k)?;
        Remainder::from_chart(chart)
    }

    pub fn from_chart(chart: FermiChart) -> Result<Remainder> {
        let n = chart.n;
        let nn = n as f64;
        let m = n + 1;
        let y = Yamabe::new(&chart)?;
        let ord = y.order;

        let low = |s: &Jet| -> f64 {
            (0..=n).map(|j| if j == 0 { s.slice(n, 0).add_const(-1.0).max_abs() } else { s.slice(n, j).max_abs() })
                .fold(0.0, f64::max)
        };

        // recursive solve
        let mut tau = Jet::constant(m, ord, 1.0);
        let mut sigma = Vec::new();
        for kk in 2..=n + 1 {
            let s = y.apply(&tau)?;
            let c = s.slice(n, kk - 1);
            let lin = (2.0 * kk as f64 / (nn + 1.0)) * (nn - kk as f64 + 2.0);
            let sk = c.scale(-1.0 / lin);
            sigma.push(sk.value());
            tau = tau + shifted(&sk, m, kk - 1, ord);
        }
        let s = y.apply(&tau)?;
        let recursive = s.slice(n, n + 1).value();
        let low_recursive = low(&s);
        if low_recursive > SERIES_TOL {
            return Err(Error::Mismatch { what: "low orders of S - 1, recursive solve".into(), residual: low_recursive });
        }

        // closed coefficient formulas, fed with fields read from the chart
        let det0 = mat_det(&chart.h.map(|j| j.slice(n, 0)))?;
        let vol0 = det0.sqrt()?;
        let v = y.vol.div(&vol0.embed(m))?;
        let vk: Vec<Jet> = (1..=n.min(3)).map(|j| v.slice(n, j)).collect();
        let volume: Vec<f64> = (1..=n + 1).map(|j| v.slice(n, j).value()).collect();
        let scal0 = chart.scal.slice(n, 0).scale(1.0 / (2.0 * nn));
        let scal1 = chart.scal.slice(n, 1).scale(1.0 / (2.0 * nn));
        let h0 = chart.h.map(|j| j.slice(n, 0));
        let h0inv = mat_inverse(&h0)?;
        let s2 = vk[0].scale(1.0 / (2.0 * nn));
        let s3 = vk[1].scale(2.0 / (3.0 * (nn - 1.0))) - (&vk[0] * &vk[0]).scale(1.0 / (3.0 * nn))
            + scal0.scale(1.0 / (3.0 * (nn - 1.0)));
        let mut coeffs = vec![s2.clone(), s3];
        if n == 3 {
            let lap2 = laplacian(n, &h0inv, &vol0, &s2)?;
            let s4 = vk[2].scale(0.75 / (nn - 2.0))
                - (&vk[0] * &vk[1]).scale((9.0 * nn * nn - 20.0 * nn + 7.0) / (12.0 * nn * (nn - 1.0) * (nn - 2.0)))
                + (&(&vk[0] * &vk[0]) * &vk[0]).scale((6.0 * nn * nn - 11.0 * nn + 1.0) / (24.0 * nn * nn * (nn - 2.0)))
                + (&vk[0] * &scal0).scale((2.0 * nn - 1.0) / (6.0 * nn * (nn - 1.0) * (nn - 2.0)))
                + scal1.scale(0.25 / (nn - 2.0))
                + lap2.scale(0.25 / (nn - 2.0));
            coeffs.push(s4);
        }
        let mut tau_p = Jet::constant(m, ord, 1.0);
        for (i, c) in coeffs.iter().enumerate() {
            tau_p = tau_p + shifted(c, m, i + 1, ord);
        }
        let sp = y.apply(&tau_p)?;
        let parametric = sp.slice(n, n + 1).value();
        let low_parametric = low(&sp);
        if low_parametric > SERIES_TOL {
            return Err(Error::Mismatch { what: "low orders of S - 1, closed coefficients".into(), residual: low_parametric });
        }
        let sigma_parametric = coeffs.iter().map(|c| c.value()).collect();
        drop(y);
        Ok(Remainder {
            n,
            parametric,
            recursive,
            sigma,
            sigma_parametric,
            low_parametric,
            low_recursive,
            volume,
            chart,
        })
    }
}

/// Normal-coordinate quantities compared with their closed formulas.
#[derive(Clone, Debug)]
pub struct ChartCheck {
    pub name: &'static str,
    pub chart: f64,
    pub formula: f64,
}

impl ChartCheck {
    pub fn residual(&self) -> f64 {
        (self.chart - self.formula).abs() / (1.0 + self.formula.abs())
    }
}

fn push_tensor(out: &mut Vec<ChartCheck>, name: &'static str, chart: &Tensor, formula: &Tensor) {
    let d = chart - formula;
    let worst = (0..d.data().len()).max_by(|&a, &b| d.data()[a].abs().total_cmp(&d.data()[b].abs())).unwrap_or(0);
    out.push(ChartCheck { name, chart: chart.data()[worst], formula: formula.data()[worst] });
}

/// Compare the normal-coordinate chart with the pointwise formulas. `geo` must
/// be evaluated at the chart's base point with order at least 4.
pub fn chart_checks(chart: &FermiChart, geo: &Geometry, exp: &Expansion) -> Result<Vec<ChartCheck>> {
    let n = chart.n;
    let m = n + 1;
    let sj = &geo.jets;
    let s = &geo.surface;
    let a = &geo.ambient;
    let frame = &sj.frame;
    let mut out = Vec::new();
    out.push(ChartCheck { name: "gauss_lemma", chart: chart.gauss_defect(), formula: 0.0 });

    let hk = |k: usize| -> Tensor { chart.h.map(|j| j.slice(n, k)).value().transform(frame) };
    push_tensor(&mut out, "h1", &hk(1), &exp.h1);
    push_tensor(&mut out, "h2", &hk(2), &exp.h2);
    push_tensor(&mut out, "h3", &hk(3), &exp.h3);
    if let Some(t4) = exp.tr_h4 {
        if chart.order >= 4 {
            out.push(ChartCheck { name: "tr_h4", chart: hk(4).trace(), formula: t4 });
        }
    }

    let vol = mat_det(&chart.h)?.sqrt()?;
    let det0 = mat_det(&chart.h.map(|j| j.slice(n, 0)))?.sqrt()?;
    let v = vol.div(&det0.embed(m))?;
    for (k, name) in [(1, "v1"), (2, "v2"), (3, "v3"), (4, "v4")] {
        if k <= chart.order && k <= exp.v_closed.len() {
            out.push(ChartCheck { name, chart: v.slice(n, k).value(), formula: exp.v_closed[k - 1] });
        }
    }
    let hp = chart.h.map(|j| j.partial(n).expect("order"));
    let mut q = Jet::zero(m, hp.order());
    for i in 0..n {
        for j in 0..n {
            q = q + chart.hinv.get(&[i, j]) * hp.get(&[j, i]);
        }
    }
    let log_v = vol.partial(n)?.div(&vol)?;
    out.push(ChartCheck { name: "log_volume", chart: (&log_v - &q.scale(0.5)).max_abs(), formula: 0.0 });

    out.push(ChartCheck { name: "d_ric_rr", chart: chart.ric_rr.slice(n, 1).value(), formula: a.d0_ric00() });
    if let Ok(d) = a.d00_ric00() {
        if chart.ric_rr.order() >= 2 {
            out.push(ChartCheck { name: "dd_ric_rr", chart: 2.0 * chart.ric_rr.slice(n, 2).value(), formula: d });
        }
    }
    let gbar = a.g_normal();
    let f = &a.d0_r0ij0() + &(&s.l.matmul(&gbar) + &gbar.matmul(&s.l));
    let dr = chart.r_rijr.map(|j| j.slice(n, 1)).value().transform(frame);
    push_tensor(&mut out, "d_r_0ij0", &dr, &f);

    // a fixed test function and 1-form in chart coordinates
    let x = Jet::variables(geo.order, &sj.x0);
    let off: Vec<Jet> = x.iter().map(|j| j.add_const(-j.value())).collect();
    let mut u = off[0].scale(0.7) + (&off[0] * &off[0]).scale(0.5);
    for i in 1..n {
        u = u + off[i].scale(0.3 / i as f64) + (&off[i] * &off[0]).scale(0.25) + (&off[i] * &off[i]).scale(-0.2);
    }
    let w: Vec<Jet> = (0..n)
        .map(|i| off[(i + 1) % n].scale(0.4) + (&off[i] * &off[0]).scale(0.3) + Jet::constant(n, geo.order, 0.5 - 0.2 * i as f64))
        .collect();
    let us = JetTensor::scalar(u.clone());
    let hess_u = sj.hess_at(&us)?;
    let du = sj.grad_at(&us)?;
    let wt = JetTensor::from_vec(n, 1, w.clone());
    let grad_w = sj.grad_at(&wt)?;
    let w0 = sj.at(&wt);
    let ue = u.truncate(chart.order).embed(m);
    let we: Vec<Jet> = w.iter().map(|j| j.truncate(chart.order).embed(m)).collect();
    let lap = laplacian(n, &chart.hinv, &vol, &ue)?;
    let div = divergence(n, &chart.hinv, &vol, &we)?;
    out.push(ChartCheck { name: "lap_prime", chart: lap.slice(n, 1).value(), formula: lap_prime(geo, &hess_u, &du) });
    out.push(ChartCheck { name: "div_prime", chart: div.slice(n, 1).value(), formula: div_prime(geo, &grad_w, &w0) });
    Ok(out)
}
