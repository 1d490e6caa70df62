//! Geodesic normal coordinates off a hypersurface.
//!
//! `Φ(x, r) = exp_{ι(x)}(r N(x))` is computed as a jet in `(x, r)` by Picard
//! iteration of the geodesic equation, integrating twice in `r`. Pulling the
//! ambient metric back along `Φ` gives `dr² + h_r` to the order carried.

use alloc::vec::Vec;

use crate::ambient::MetricField;
use crate::error::{Error, Result};
use crate::field::{mat_inverse, JetTensor};
use crate::hypersurface::{Embedding, SurfaceJets};
use crate::jets::{Composer, Jet};

/// Geodesics `s ↦ exp_{p(x)}(s V(x))` as jets in `(x, s)`, `s` the last variable.
///
/// `p` must have order at least `order`, `v` at least `order - 1`; `gamma` holds
/// the Christoffel symbols `[a][b][c]` expanded at `y0 = p(x0)` to order
/// `order - 1` or more. Pass `None` for a flat chart with vanishing symbols.
pub fn exp_map(gamma: Option<&JetTensor>, p: &[Jet], v: &[Jet], order: usize) -> Result<Vec<Jet>> {
    let big = p.len();
    if v.len() != big || big == 0 {
        return Err(Error::Invalid("exp map needs matching point and direction".into()));
    }
    if order < 1 {
        return Err(Error::order(1, order, "geodesic jet"));
    }
    let n = p[0].arity();
    let m = n + 1;
    let base: Vec<Jet> = p
        .iter()
        .zip(v)
        .map(|(pa, va)| pa.truncate(order).embed(m) + va.truncate(order - 1).embed(m).mul_var(n))
        .collect();
    let gamma = match gamma {
        Some(g) if !g.is_zero() => g.truncate(order - 1),
        _ => return Ok(base),
    };
    let y0: Vec<f64> = base.iter().map(|j| j.value()).collect();
    let mut y = base.clone();
    for _ in 0..order + 2 {
        let off: Vec<Jet> = y.iter().zip(&y0).map(|(j, c)| j.add_const(-c)).collect();
        let comp = Composer::new(&off, order - 1);
        let ydot: Vec<Jet> = y.iter().map(|j| j.partial(n)).collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(big);
        let mut change = 0.0f64;
        let mut scale = 1.0f64;
        for a in 0..big {
            let mut acc = Jet::zero(m, order - 1);
            for b in 0..big {
                for c in 0..big {
                    let g = gamma.get(&[a, b, c]);
                    if g.is_zero() {
                        continue;
                    }
                    let gc = comp.apply(g);
                    acc = acc - &(&gc * &ydot[b]) * &ydot[c];
                }
            }
            let ya = &base[a] + &acc.integrate(n).integrate(n).truncate(order);
            change = change.max((&ya - &y[a]).max_abs());
            scale = scale.max(ya.max_abs());
            next.push(ya);
        }
        y = next;
        if change <= 1e-15 * scale {
            return Ok(y);
        }
    }
    Err(Error::Geometry("geodesic iteration did not settle".into()))
}

/// The ambient metric and curvature pulled back to normal coordinates around a
/// hypersurface point. Coordinates are `(x1 .. xn, r)`; index `n` is `r`.
#[derive(Clone, Debug)]
pub struct FermiChart {
    pub n: usize,
    pub order: usize,
    pub phi: Vec<Jet>,
    /// Pulled-back metric, order `order`.
    pub g: JetTensor,
    /// `h_r`, the tangential block.
    pub h: JetTensor,
    pub hinv: JetTensor,
    /// Ambient scalar curvature along `Φ`, order `order - 2`.
    pub scal: Jet,
    /// `Ric̄(∂_r, ∂_r)`.
    pub ric_rr: Jet,
    /// `R̄(∂_r, ∂_i, ∂_j, ∂_r)`.
    pub r_rijr: JetTensor,
    /// Surface data at the base point, including the frame used for comparisons.
    pub surface: SurfaceJets,
}

impl FermiChart {
    pub fn new(metric: &MetricField, emb: &Embedding, x0: &[f64], order: usize) -> Result<FermiChart> {
        if order < 2 {
            return Err(Error::order(2, order, "normal coordinates"));
        }
        let n = emb.n();
        let m = n + 1;
        let sj = SurfaceJets::new(metric, emb, x0, order + 1)?;
        let amb = &sj.ambient;
        let gamma = if amb.flat { None } else { Some(&amb.gamma) };
        let phi = exp_map(gamma, &sj.iota, &sj.normal, order + 1)?;
        let dphi: Vec<Vec<Jet>> =
            phi.iter().map(|f| (0..m).map(|i| f.partial(i)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        let frame = JetTensor::from_fn(m, 2, |x| dphi[x[0]][x[1]].clone());
        let composer = if amb.flat {
            None
        } else {
            let off: Vec<Jet> = phi.iter().map(|j| j.add_const(-j.value())).collect();
            Some(Composer::new(&off, order))
        };
        let compose = |f: &JetTensor| -> JetTensor {
            match &composer {
                Some(c) => f.map(|j| c.apply(j)),
                None => f.map(|j| Jet::constant(m, j.order().min(order), j.value())),
            }
        };
        let g = compose(&amb.g).transform(&frame);
        let h = JetTensor::from_fn(n, 2, |x| g.get(x).clone());
        let hinv = mat_inverse(&h)?;
        let scal = compose(&JetTensor::scalar(amb.scal.clone())).as_scalar().clone();
        let ric = compose(&amb.ric).transform(&frame);
        let riem = compose(&amb.riem).transform(&frame);
        let ric_rr = ric.get(&[n, n]).clone();
        let r_rijr = JetTensor::from_fn(n, 2, |x| riem.get(&[n, x[0], x[1], n]).clone());
        Ok(FermiChart { n, order, phi, g, h, hinv, scal, ric_rr, r_rijr, surface: sj })
    }

    /// Largest deviation from `g_rr = 1`, `g_ri = 0`.
    pub fn gauss_defect(&self) -> f64 {
        let n = self.n;
        let mut d = self.g.get(&[n, n]).add_const(-1.0).max_abs();
        for i in 0..n {
            d = d.max(self.g.get(&[n, i]).max_abs());
        }
        d
    }
}
