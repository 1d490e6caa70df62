//! Embedded hypersurfaces: induced metric, unit normal, second fundamental
//! form and every tangential derivative used downstream.
//!
//! Sign conventions: `L(X, Y) = -g(∇̄_X Y, N)`, so a round sphere with the
//! outward normal has `L = h/ρ` and positive mean curvature `H = tr L / n`.
//! `ů = L - H h`. The normal is built from cofactors of the Jacobian and
//! multiplied by the embedding's orientation sign.

use alloc::format;
use alloc::vec::Vec;

use crate::ambient::{AmbientJets, AmbientStack, MetricField};
use crate::error::{Error, Result};
use crate::expr::{coords, Expr};
use crate::field::{christoffel, cov_deriv, cov_deriv_at, mat_det, mat_inverse, JetTensor};
use crate::jets::{Composer, Jet};
use crate::ambient::{curvature_parts, riemann};
use crate::tensor::{cholesky, inverse, Tensor};

#[derive(Clone, Debug)]
pub struct Embedding {
    n: usize,
    maps: Vec<Expr>,
    orientation: f64,
}

impl Embedding {
    /// `maps` gives the `n + 1` ambient coordinates as functions of `x1 .. xn`.
    pub fn new(n: usize, maps: Vec<Expr>, orientation: f64) -> Result<Embedding> {
        if maps.len() != n + 1 {
            return Err(Error::Invalid(format!("embedding of dimension {} needs {} maps", n, n + 1)));
        }
        if let Some(m) = maps.iter().filter_map(|e| e.max_var()).max() {
            if m >= n {
                return Err(Error::Invalid(format!("embedding uses x{} with chart dimension {}", m + 1, n)));
            }
        }
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::Invalid("normal orientation must be +1 or -1".into()));
        }
        Ok(Embedding { n, maps, orientation })
    }

    pub fn parse(n: usize, maps: &[&str], params: &[(&str, f64)], orientation: f64) -> Result<Embedding> {
        let e = maps
            .iter()
            .map(|s| Expr::parse(s, coords(n), params))
            .collect::<Result<Vec<_>>>()?;
        Embedding::new(n, e, orientation)
    }

    /// Graph `x ↦ (x, f(x))`, oriented so that `L = Hess f` where `df = 0`.
    pub fn graph(n: usize, f: Expr) -> Embedding {
        let mut maps: Vec<Expr> = (0..n).map(Expr::Var).collect();
        maps.push(f);
        Embedding { n, maps, orientation: -1.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn maps(&self) -> &[Expr] {
        &self.maps
    }

    pub fn flipped(&self) -> Embedding {
        Embedding { n: self.n, maps: self.maps.clone(), orientation: -self.orientation }
    }

    pub fn point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        self.maps.iter().map(|e| e.eval_f64(x)).collect()
    }

    pub fn lift(&self, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check(x0)?;
        let vars = Jet::variables(order, x0);
        self.maps.iter().map(|e| e.eval(&vars)).collect()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Invalid(format!("chart point has {} coordinates, need {}", x.len(), self.n)));
        }
        Ok(())
    }
}

/// Determinant of a small matrix of jets by cofactor expansion.
fn det_small(m: &[Vec<Jet>]) -> Jet {
    let k = m.len();
    match k {
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc: Option<Jet> = None;
            for c in 0..k {
                let minor: Vec<Vec<Jet>> = (1..k)
                    .map(|r| (0..k).filter(|&j| j != c).map(|j| m[r][j].clone()).collect())
                    .collect();
                let t = &m[0][c] * &det_small(&minor);
                acc = Some(match acc {
                    None => t,
                    Some(a) if c % 2 == 0 => a + t,
                    Some(a) => a - t,
                });
            }
            acc.unwrap()
        }
    }
}

/// Covector `ν` with `det[∂ι | V] = V^a ν_a`, from the `n × n` minors.
pub fn cofactor_normal(diota: &[Vec<Jet>]) -> Vec<Jet> {
    let big = diota.len();
    let n = big - 1;
    (0..big)
        .map(|a| {
            let minor: Vec<Vec<Jet>> = (0..big).filter(|&r| r != a).map(|r| diota[r].clone()).collect();
            let d = det_small(&minor);
            if (a + n).is_multiple_of(2) {
                d
            } else {
                -d
            }
        })
        .collect()
}

/// Products and traces of symmetric 2-tensors on `M` with the inverse metric.
pub struct Algebra<'a> {
    pub hinv: &'a JetTensor,
}

impl Algebra<'_> {
    /// `(a b)_{ij} = a_{ik} h^{kl} b_{lj}`.
    pub fn prod(&self, a: &JetTensor, b: &JetTensor) -> JetTensor {
        let n = a.dim();
        let ab = JetTensor::from_fn(n, 2, |x| {
            let mut acc = Jet::zero(a.arity(), a.order().min(b.order()).min(self.hinv.order()));
            for k in 0..n {
                for l in 0..n {
                    acc = acc + a.get(&[x[0], k]) * self.hinv.get(&[k, l]) * b.get(&[l, x[1]]).clone();
                }
            }
            acc
        });
        ab
    }

    pub fn trace(&self, a: &JetTensor) -> Jet {
        a.trace(0, 1, Some(self.hinv)).as_scalar().clone()
    }

    pub fn inner(&self, a: &JetTensor, b: &JetTensor) -> Jet {
        self.trace(&self.prod(a, b))
    }

    /// `(a)_i^k ω_k` for a 2-tensor and a 1-form.
    pub fn act(&self, a: &JetTensor, w: &JetTensor) -> JetTensor {
        let n = a.dim();
        JetTensor::from_fn(n, 1, |x| {
            let mut acc = Jet::zero(a.arity(), a.order().min(w.order()).min(self.hinv.order()));
            for k in 0..n {
                for l in 0..n {
                    acc = acc + a.get(&[x[0], k]) * self.hinv.get(&[k, l]) * w.get(&[l]).clone();
                }
            }
            acc
        })
    }

    pub fn trace_free(&self, a: &JetTensor, h: &JetTensor) -> JetTensor {
        let t = self.trace(a).scale(1.0 / a.dim() as f64);
        a.sub(&h.mul_jet(&t))
    }
}

/// Everything about the embedded hypersurface as jets in chart coordinates.
#[derive(Clone, Debug)]
pub struct SurfaceJets {
    pub n: usize,
    pub order: usize,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub ambient: AmbientJets,
    pub iota: Vec<Jet>,
    /// `∂_i ι^a`, indexed `[a][i]`.
    pub diota: Vec<Vec<Jet>>,
    /// Unit normal `N^a`.
    pub normal: Vec<Jet>,
    /// Ambient metric along the embedding.
    pub g: JetTensor,
    pub gamma_bar: JetTensor,
    pub h: JetTensor,
    pub hinv: JetTensor,
    pub gamma: JetTensor,
    pub riem: JetTensor,
    pub ric: JetTensor,
    pub scal: Jet,
    pub schouten: JetTensor,
    pub second: JetTensor,
    /// Ambient tensors in the adapted frame `(N, ∂_1 ι, .., ∂_n ι)`.
    pub riem_ad: JetTensor,
    pub ric_ad: JetTensor,
    pub schouten_ad: JetTensor,
    pub weyl_ad: JetTensor,
    pub scal_bar: Jet,
    pub nabla_ric_ad: Option<JetTensor>,
    /// Orthonormal frame of `h` at the base point: `e_α = E[i][α] ∂_i`.
    pub frame: Tensor,
    /// Adapted ambient frame `(N, e_1, .., e_n)` at the base point.
    pub frame_full: Tensor,
}

impl SurfaceJets {
    pub fn new(metric: &MetricField, emb: &Embedding, x0: &[f64], order: usize) -> Result<SurfaceJets> {
        let iota = emb.lift(x0, order)?;
        SurfaceJets::from_lift(metric, iota, emb.orientation(), x0, order)
    }

    /// Same as [`SurfaceJets::new`] for an embedding known only through its
    /// jets at `x0`, one per ambient coordinate, of order at least `order`.
    pub fn from_lift(
        metric: &MetricField,
        iota: Vec<Jet>,
        orientation: f64,
        x0: &[f64],
        order: usize,
    ) -> Result<SurfaceJets> {
        let n = x0.len();
        let big = n + 1;
        if iota.len() != big || iota.iter().any(|j| j.arity() != n || j.order() < order) {
            return Err(Error::Invalid(format!("embedding jets must be {} jets in {} variables of order {}", big, n, order)));
        }
        let iota: Vec<Jet> = iota.iter().map(|j| j.truncate(order)).collect();
        if metric.dim() != big {
            return Err(Error::Invalid(format!(
                "metric dimension {} does not match hypersurface dimension {}",
                metric.dim(),
                n
            )));
        }
        if order < 2 {
            return Err(Error::order(2, order, "second fundamental form"));
        }
        let y0: Vec<f64> = iota.iter().map(|j| j.value()).collect();
        let ambient = AmbientJets::new(metric, &y0, order)?;
        let compose = |c: &Option<Composer>, f: &JetTensor| -> JetTensor {
            match c {
                Some(c) => f.map(|j| c.apply(j)),
                None => f.map(|j| Jet::constant(n, j.order(), j.value())),
            }
        };
        let composer = if ambient.flat {
            None
        } else {
            let off: Vec<Jet> = iota.iter().map(|j| j.add_const(-j.value())).collect();
            Some(Composer::new(&off, order))
        };
        let g = compose(&composer, &ambient.g);
        let ginv = compose(&composer, &ambient.ginv);
        let gamma_bar = compose(&composer, &ambient.gamma);
        let riem_x = compose(&composer, &ambient.riem);
        let ric_x = compose(&composer, &ambient.ric);
        let schouten_x = compose(&composer, &ambient.schouten);
        let weyl_x = compose(&composer, &ambient.weyl);
        let scal_bar = compose(&composer, &JetTensor::scalar(ambient.scal.clone())).as_scalar().clone();
        let nabla_ric_x = ambient.nabla_ric.as_ref().map(|t| compose(&composer, t));

        let diota: Vec<Vec<Jet>> = iota
            .iter()
            .map(|f| (0..n).map(|i| f.partial(i)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let nu = cofactor_normal(&diota);
        let ginv1 = ginv.truncate(order - 1);
        let mut raised: Vec<Jet> = Vec::with_capacity(big);
        for a in 0..big {
            let mut acc = Jet::zero(n, order - 1);
            for (b, nb) in nu.iter().enumerate() {
                acc = acc + ginv1.get(&[a, b]) * nb;
            }
            raised.push(acc);
        }
        let mut len2 = Jet::zero(n, order - 1);
        for a in 0..big {
            len2 = len2 + &raised[a] * &nu[a];
        }
        if !(len2.value() > 0.0) {
            return Err(Error::Geometry(format!("embedding Jacobian degenerate at {:?}", x0)));
        }
        let inv_len = len2.powf(-0.5)?.scale(orientation);
        let normal: Vec<Jet> = raised.iter().map(|r| r * &inv_len).collect();

        // adapted frame F[a][A]
        let frame_jets = JetTensor::from_fn(big, 2, |x| {
            if x[1] == 0 {
                normal[x[0]].clone()
            } else {
                diota[x[0]][x[1] - 1].clone()
            }
        });
        let g_ad = g.transform(&frame_jets);
        let h = g_ad.restrict(&[None, None], 1);
        let hinv = mat_inverse(&h)?;
        let gamma = christoffel(&h, &hinv)?;
        let (riem, ric, scal, schouten) = if gamma.order() >= 1 {
            let r = riemann(&h, &gamma)?;
            let (ric, scal, sch, _) = curvature_parts(&r, &h, &hinv);
            (r, ric, scal, sch)
        } else {
            let z = JetTensor::zeros(n, 4, n, 0);
            (z, JetTensor::zeros(n, 2, n, 0), Jet::zero(n, 0), JetTensor::zeros(n, 2, n, 0))
        };

        // second fundamental form
        let nflat: Vec<Jet> = (0..big)
            .map(|a| {
                let mut acc = Jet::zero(n, order - 1);
                for b in 0..big {
                    acc = acc + g.get(&[a, b]) * &normal[b];
                }
                acc
            })
            .collect();
        let o2 = order - 2;
        // ν̄_{bc} := N♭_a Γ̄^a_{bc}
        let ng = JetTensor::from_fn(big, 2, |x| {
            let mut acc = Jet::zero(n, o2);
            for a in 0..big {
                let gm = gamma_bar.get(&[a, x[0], x[1]]);
                if !gm.is_zero() {
                    acc = acc + &nflat[a] * gm;
                }
            }
            acc
        });
        let second = JetTensor::try_from_fn(n, 2, |x| {
            let (i, j) = (x[0], x[1]);
            let mut acc = Jet::zero(n, o2);
            for a in 0..big {
                let d2 = diota[a][i].partial(j)?;
                acc = acc + &nflat[a] * &d2;
            }
            if !ng.is_zero() {
                for b in 0..big {
                    for c in 0..big {
                        let v = ng.get(&[b, c]);
                        if !v.is_zero() {
                            acc = acc + v * &diota[b][i] * diota[c][j].clone();
                        }
                    }
                }
            }
            Ok(-acc)
        })?;

        let riem_ad = riem_x.transform(&frame_jets);
        let ric_ad = ric_x.transform(&frame_jets);
        let schouten_ad = schouten_x.transform(&frame_jets);
        let weyl_ad = weyl_x.transform(&frame_jets);
        let nabla_ric_ad = nabla_ric_x.map(|t| t.transform(&frame_jets));

        let h0 = h.value();
        let c = cholesky(&h0).ok_or_else(|| Error::Geometry(format!("induced metric degenerate at {:?}", x0)))?;
        let frame = inverse(&c).expect("triangular factor").transpose();
        let frame_full = Tensor::from_fn(big, 2, |x| {
            let a = x[0];
            if x[1] == 0 {
                normal[a].value()
            } else {
                (0..n).map(|i| diota[a][i].value() * frame.get(&[i, x[1] - 1])).sum()
            }
        });

        Ok(SurfaceJets {
            n,
            order,
            x0: x0.to_vec(),
            y0,
            ambient,
            iota,
            diota,
            normal,
            g,
            gamma_bar,
            h,
            hinv,
            gamma,
            riem,
            ric,
            scal,
            schouten,
            second,
            riem_ad,
            ric_ad,
            schouten_ad,
            weyl_ad,
            scal_bar,
            nabla_ric_ad,
            frame,
            frame_full,
        })
    }

    pub fn alg(&self) -> Algebra<'_> {
        Algebra { hinv: &self.hinv }
    }

    pub fn mean_curvature(&self) -> Jet {
        self.alg().trace(&self.second).scale(1.0 / self.n as f64)
    }

    pub fn tracefree(&self) -> JetTensor {
        let hh = self.mean_curvature();
        self.second.sub(&self.h.mul_jet(&hh))
    }

    /// `sqrt(det h)`.
    pub fn volume_density(&self) -> Result<Jet> {
        mat_det(&self.h)?.sqrt()
    }

    /// Coordinate components at the base point, expressed in the orthonormal frame.
    pub fn at(&self, t: &JetTensor) -> Tensor {
        t.value().transform(&self.frame)
    }

    pub fn grad(&self, t: &JetTensor) -> Result<JetTensor> {
        cov_deriv(t, &self.gamma)
    }

    pub fn grad_at(&self, t: &JetTensor) -> Result<Tensor> {
        Ok(cov_deriv_at(t, &self.gamma.value())?.transform(&self.frame))
    }

    /// `∇∇t` at the base point, `[a][b][..] = ∇_a ∇_b t_{..}`.
    pub fn hess_at(&self, t: &JetTensor) -> Result<Tensor> {
        if t.order() < 2 || self.gamma.order() < 1 {
            return Err(Error::order(self.order + 2 - t.order().min(2), self.order, "second covariant derivative"));
        }
        let g1 = cov_deriv(&t.truncate(2), &self.gamma.truncate(1))?;
        Ok(cov_deriv_at(&g1, &self.gamma.value())?.transform(&self.frame))
    }

    pub fn lap_at(&self, f: &Jet) -> Result<f64> {
        Ok(self.hess_at(&JetTensor::scalar(f.clone()))?.trace())
    }

    /// `δδ(b) = ∇^i ∇^j b_{ij}`.
    pub fn divdiv_at(&self, b: &JetTensor) -> Result<f64> {
        let t = self.hess_at(b)?;
        let n = self.n;
        Ok((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| t.get(&[i, j, i, j])).sum())
    }

    /// `δ(ω) = ∇^i ω_i`.
    pub fn div_at(&self, w: &JetTensor) -> Result<f64> {
        Ok(self.grad_at(w)?.trace())
    }

    /// Pull back an adapted-frame tensor to `M`, fixing the slots in
    /// `normal_slots` to the normal.
    pub fn restrict(&self, t: &JetTensor, normal_slots: &[usize]) -> JetTensor {
        let pattern: Vec<Option<usize>> =
            (0..t.rank()).map(|s| if normal_slots.contains(&s) { Some(0) } else { None }).collect();
        t.restrict(&pattern, 1)
    }

    /// Coordinate components of an ON-frame tangential tensor.
    pub fn to_coords(&self, t: &Tensor) -> Tensor {
        let c = inverse(&self.frame).expect("frame invertible");
        t.transform(&c)
    }

    pub fn ambient_stack(&self) -> Result<AmbientStack> {
        Ok(AmbientStack::from_point(&self.ambient.point()?, &self.frame_full))
    }
}

/// Tangential quantities at the base point in the orthonormal frame.
#[derive(Clone, Debug)]
pub struct SurfaceStack {
    pub n: usize,
    pub h_coords: Tensor,
    pub mean: f64,
    pub l: Tensor,
    pub lo: Tensor,
    pub lo2: Tensor,
    pub lo2_tf: Tensor,
    pub lo_norm2: f64,
    pub tr_lo3: f64,
    pub tr_lo4: f64,
    pub l2: Tensor,
    pub l_norm2: f64,
    pub tr_l3: f64,
    pub dh: Tensor,
    pub hess_h: Tensor,
    pub lap_h: f64,
    pub grad_l: Tensor,
    pub hess_l: Tensor,
    pub lap_l: Tensor,
    pub div_l: Tensor,
    pub grad_lo: Tensor,
    pub hess_lo: Tensor,
    pub lap_lo: Tensor,
    pub div_lo: Tensor,
    /// `[i][j] = ∇_i δ(ů)_j`.
    pub grad_div_lo: Tensor,
    pub divdiv_lo: f64,
    pub divdiv_lo2: f64,
    pub divdiv_lo2_tf: f64,
    pub lap_lo_norm2: f64,
    pub divdiv_hlo: f64,
    pub lap_h2: f64,
    pub riem: Tensor,
    pub ric: Tensor,
    pub scal: f64,
    pub j: f64,
    pub schouten: Option<Tensor>,
    pub lap_j: Option<f64>,
    pub divdiv_schouten: Option<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub fialkov: Option<Tensor>,
    pub divdiv_fialkov_tf: Option<f64>,
    pub w0: Tensor,
    /// `[l][i][j][k] = ∇_l W̄_{ijk0}`.
    pub grad_w0: Tensor,
    /// `∇^k W̄_{kij0}`.
    pub div_w0: Tensor,
    pub what: Tensor,
    pub divdiv_what: f64,
    pub r0: Tensor,
    pub grad_r0: Tensor,
    pub ric0: Tensor,
    pub grad_ric0: Tensor,
    pub div_ric0: f64,
    pub p0: Tensor,
    pub grad_p0: Tensor,
    pub div_p0: f64,
    pub ric_t: Tensor,
    pub divdiv_ric_t: f64,
    pub pbar_t: Tensor,
    pub ric00: f64,
    pub p00: f64,
    pub lap_p00: f64,
    pub lap_ric00: f64,
    pub scal_bar: f64,
    pub lap_scal_bar: f64,
    /// `∇̄_0(Ric̄)_0` as a 1-form on `M`.
    pub d0ric0: Option<Tensor>,
    pub div_d0ric0: Option<f64>,
    pub div_hric0: f64,
    pub div_lric0: f64,
    pub div_loric0: f64,
}

impl SurfaceStack {
    pub fn build(s: &SurfaceJets) -> Result<SurfaceStack> {
        let n = s.n;
        let nn = n as f64;
        let alg = s.alg();
        let lj = &s.second;
        let hj = s.mean_curvature();
        let loj = s.tracefree();
        let lo2j = alg.prod(&loj, &loj);
        let lo_norm2j = alg.trace(&lo2j);
        let lo2_tfj = alg.trace_free(&lo2j, &s.h);
        let hloj = loj.mul_jet(&hj);
        let h2j = &hj * &hj;

        let l = s.at(lj);
        let lo = s.at(&loj);
        let lo2 = s.at(&lo2j);
        let lo2_tf = s.at(&lo2_tfj);
        let l2 = l.matmul(&l);
        let lo3 = lo2.matmul(&lo);

        let hs = JetTensor::scalar(hj.clone());
        let dh = s.grad_at(&hs)?;
        let hess_h = s.hess_at(&hs)?;
        let grad_l = s.grad_at(lj)?;
        let hess_l = s.hess_at(lj)?;
        let grad_lo = s.grad_at(&loj)?;
        let hess_lo = s.hess_at(&loj)?;
        let contract_first = |t: &Tensor| -> Tensor {
            // [a][a][i][j] summed
            Tensor::from_fn(n, 2, |x| (0..n).map(|k| t.get(&[k, k, x[0], x[1]])).sum())
        };
        let lap_l = contract_first(&hess_l);
        let lap_lo = contract_first(&hess_lo);
        let div_l = Tensor::from_fn(n, 1, |x| (0..n).map(|k| grad_l.get(&[k, k, x[0]])).sum());
        let div_lo = Tensor::from_fn(n, 1, |x| (0..n).map(|k| grad_lo.get(&[k, k, x[0]])).sum());
        let grad_div_lo = Tensor::from_fn(n, 2, |x| (0..n).map(|k| hess_lo.get(&[x[0], k, k, x[1]])).sum());
        let divdiv_lo = grad_div_lo.trace();

        let mut kappa1 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    kappa1 += (hess_lo.get(&[i, j, k, i]) - hess_lo.get(&[j, i, k, i])) * lo.get(&[k, j]);
                }
            }
        }
        let kappa2 = lo.dot(&lap_lo) - 1.5 * lo.dot(&grad_div_lo.transpose());

        let riem = s.at(&s.riem);
        let ric = s.at(&s.ric);
        let scal = s.scal.value();
        let j = scal / (2.0 * (nn - 1.0));
        let (schouten, lap_j, divdiv_schouten) = if n > 2 {
            let sch = s.at(&s.schouten);
            let jj = s.scal.scale(1.0 / (2.0 * (nn - 1.0)));
            let lap_j = if jj.order() >= 2 { Some(s.lap_at(&jj)?) } else { None };
            let dd = if s.schouten.order() >= 2 { Some(s.divdiv_at(&s.schouten)?) } else { None };
            (Some(sch), lap_j, dd)
        } else {
            (None, None, None)
        };

        let pbar_tj = s.restrict(&s.schouten_ad, &[]);
        let ric_tj = s.restrict(&s.ric_ad, &[]);
        let (fialkov, divdiv_fialkov_tf) = if n > 2 {
            // ι*P̄ - P + Hů + H²h/2
            let mut f = pbar_tj.sub(&s.schouten);
            f.axpy(1.0, &hloj);
            f.axpy(0.5, &s.h.mul_jet(&h2j));
            let ftf = alg.trace_free(&f, &s.h);
            let dd = if ftf.order() >= 2 { Some(s.divdiv_at(&ftf)?) } else { None };
            (Some(s.at(&f)), dd)
        } else {
            (None, None)
        };

        let w0j = s.restrict(&s.weyl_ad, &[3]);
        let whatj = s.restrict(&s.weyl_ad, &[0, 3]);
        let r0j = s.restrict(&s.riem_ad, &[3]);
        let ric0j = s.restrict(&s.ric_ad, &[1]);
        let p0j = s.restrict(&s.schouten_ad, &[1]);
        let ric00j = s.ric_ad.get(&[0, 0]).clone();
        let p00j = s.schouten_ad.get(&[0, 0]).clone();

        let grad_w0 = s.grad_at(&w0j)?;
        let div_w0 = Tensor::from_fn(n, 2, |x| (0..n).map(|k| grad_w0.get(&[k, k, x[0], x[1]])).sum());
        let grad_ric0 = s.grad_at(&ric0j)?;
        let grad_p0 = s.grad_at(&p0j)?;

        let (d0ric0, div_d0ric0) = match &s.nabla_ric_ad {
            Some(t) => {
                let w = t.restrict(&[Some(0), None, Some(0)], 1);
                let div = if w.order() >= 1 { Some(s.div_at(&w)?) } else { None };
                (Some(s.at(&w)), div)
            }
            None => (None, None),
        };
        let hric0 = ric0j.mul_jet(&hj);
        let lric0 = alg.act(lj, &ric0j);
        let loric0 = alg.act(&loj, &ric0j);

        Ok(SurfaceStack {
            n,
            h_coords: s.h.value(),
            mean: hj.value(),
            lo_norm2: lo_norm2j.value(),
            tr_lo3: lo3.trace(),
            tr_lo4: lo2.dot(&lo2),
            l_norm2: l.norm2(),
            tr_l3: l2.matmul(&l).trace(),
            l,
            lo,
            lo2,
            lo2_tf,
            l2,
            lap_h: hess_h.trace(),
            dh,
            hess_h,
            grad_l,
            hess_l,
            lap_l,
            div_l,
            grad_lo,
            hess_lo,
            lap_lo,
            div_lo,
            grad_div_lo,
            divdiv_lo,
            divdiv_lo2: s.divdiv_at(&lo2j)?,
            divdiv_lo2_tf: s.divdiv_at(&lo2_tfj)?,
            lap_lo_norm2: s.lap_at(&lo_norm2j)?,
            divdiv_hlo: s.divdiv_at(&hloj)?,
            lap_h2: s.lap_at(&h2j)?,
            riem,
            ric,
            scal,
            j,
            schouten,
            lap_j,
            divdiv_schouten,
            kappa1,
            kappa2,
            fialkov,
            divdiv_fialkov_tf,
            w0: s.at(&w0j),
            grad_w0,
            div_w0,
            what: s.at(&whatj),
            divdiv_what: s.divdiv_at(&whatj)?,
            r0: s.at(&r0j),
            grad_r0: s.grad_at(&r0j)?,
            ric0: s.at(&ric0j),
            div_ric0: grad_ric0.trace(),
            grad_ric0,
            p0: s.at(&p0j),
            div_p0: grad_p0.trace(),
            grad_p0,
            ric_t: s.at(&ric_tj),
            divdiv_ric_t: s.divdiv_at(&ric_tj)?,
            pbar_t: s.at(&pbar_tj),
            ric00: ric00j.value(),
            p00: p00j.value(),
            lap_p00: s.lap_at(&p00j)?,
            lap_ric00: s.lap_at(&ric00j)?,
            scal_bar: s.scal_bar.value(),
            lap_scal_bar: s.lap_at(&s.scal_bar)?,
            d0ric0,
            div_d0ric0,
            div_hric0: s.div_at(&hric0)?,
            div_lric0: s.div_at(&lric0)?,
            div_loric0: s.div_at(&loric0)?,
        })
    }
}
