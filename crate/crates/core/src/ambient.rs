//! Ambient metric: curvature jets and their orthonormal-frame values.
//!
//! Conventions, with `N` the ambient dimension:
//! `R_{ijk}^l = ∂_iΓ^l_{jk} - ∂_jΓ^l_{ik} + Γ^m_{jk}Γ^l_{im} - Γ^m_{ik}Γ^l_{jm}`,
//! `R_{ijkl} = R_{ijk}^m g_{ml}`, `Ric_{jk} = g^{il}R_{ijkl}`, so the unit
//! sphere has `R_{ijkl} = g_{jk}g_{il} - g_{ik}g_{jl}` and positive Ricci.
//! `2(N-1)J = Sc`, `(N-2)P = Ric - Jg` and `R = -P⊘g + W` with
//! `(P⊘g)_{ijkl} = P_{ik}g_{jl} - P_{jk}g_{il} + P_{jl}g_{ik} - P_{il}g_{jk}`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{coords, Expr, Func};
use crate::field::{christoffel, cov_deriv, cov_deriv_at, mat_inverse, JetTensor};
use crate::jets::Jet;
use crate::tensor::{cholesky, Tensor};

/// A Riemannian metric given by component expressions in ambient coordinates.
#[derive(Clone, Debug)]
pub struct MetricField {
    dim: usize,
    comps: Vec<Expr>,
}

impl MetricField {
    /// `comps` is either the full `dim × dim` table (read as symmetric, upper
    /// triangle wins) or the upper triangle row by row.
    pub fn new(dim: usize, comps: Vec<Expr>) -> Result<MetricField> {
        let full = if comps.len() == dim * dim {
            let mut v = comps.clone();
            for i in 0..dim {
                for j in 0..i {
                    v[i * dim + j] = comps[j * dim + i].clone();
                }
            }
            v
        } else if comps.len() == dim * (dim + 1) / 2 {
            let mut v = alloc::vec![Expr::Const(0.0); dim * dim];
            let mut k = 0;
            for i in 0..dim {
                for j in i..dim {
                    v[i * dim + j] = comps[k].clone();
                    v[j * dim + i] = comps[k].clone();
                    k += 1;
                }
            }
            v
        } else {
            return Err(Error::Invalid(format!(
                "metric in dimension {} needs {} or {} components, got {}",
                dim,
                dim * dim,
                dim * (dim + 1) / 2,
                comps.len()
            )));
        };
        if let Some(m) = full.iter().filter_map(|e| e.max_var()).max() {
            if m >= dim {
                return Err(Error::Invalid(format!("metric uses coordinate x{} in dimension {}", m + 1, dim)));
            }
        }
        Ok(MetricField { dim, comps: full })
    }

    pub fn parse(dim: usize, comps: &[&str], params: &[(&str, f64)]) -> Result<MetricField> {
        let e = comps
            .iter()
            .map(|s| Expr::parse(s, coords(dim), params))
            .collect::<Result<Vec<_>>>()?;
        MetricField::new(dim, e)
    }

    pub fn euclidean(dim: usize) -> MetricField {
        let comps = (0..dim * dim)
            .map(|k| Expr::Const(if k / dim == k % dim { 1.0 } else { 0.0 }))
            .collect();
        MetricField { dim, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.comps[i * self.dim + j]
    }

    pub fn is_constant(&self) -> bool {
        self.comps.iter().all(|e| e.is_const())
    }

    /// The conformally related metric `e^{2φ} g`.
    pub fn conformal(&self, phi: &Expr) -> MetricField {
        let f = Expr::call(Func::Exp, Expr::Const(2.0) * phi.clone());
        MetricField { dim: self.dim, comps: self.comps.iter().map(|c| f.clone() * c.clone()).collect() }
    }

    pub fn at(&self, y: &[f64]) -> Result<Tensor> {
        let d = self.dim;
        let v = self.comps.iter().map(|e| e.eval_f64(y)).collect::<Result<Vec<_>>>()?;
        Ok(Tensor::from_vec(d, 2, v))
    }

    /// Jets of the components at `y0`, after checking positive definiteness there.
    pub fn lift(&self, y0: &[f64], order: usize) -> Result<JetTensor> {
        let d = self.dim;
        if y0.len() != d {
            return Err(Error::Invalid(format!("ambient point has {} coordinates, need {}", y0.len(), d)));
        }
        if cholesky(&self.at(y0)?).is_none() {
            return Err(Error::Geometry(format!("metric not positive definite at {:?}", y0)));
        }
        let vars = Jet::variables(order, y0);
        let mut data: Vec<Jet> = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                if j < i {
                    let c = data[j * d + i].clone();
                    data.push(c);
                } else {
                    data.push(self.comps[i * d + j].eval(&vars)?);
                }
            }
        }
        Ok(JetTensor::from_vec(d, 2, data))
    }
}

/// Curvature of a metric as jets around one point.
#[derive(Clone, Debug)]
pub struct AmbientJets {
    pub dim: usize,
    pub order: usize,
    pub base: Vec<f64>,
    pub g: JetTensor,
    pub ginv: JetTensor,
    pub gamma: JetTensor,
    pub riem: JetTensor,
    pub ric: JetTensor,
    pub scal: Jet,
    pub schouten: JetTensor,
    pub weyl: JetTensor,
    /// `∇_a Ric_{bc}`, present when the order allows it.
    pub nabla_ric: Option<JetTensor>,
    pub flat: bool,
}

/// Lowered Riemann tensor from Christoffel symbols and the metric.
pub fn riemann(g: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    let d = g.dim();
    if gamma.order() == 0 {
        return Err(Error::order(2, 1, "Riemann tensor"));
    }
    let o = gamma.order() - 1;
    let ar = g.arity();
    if gamma.is_zero() {
        return Ok(JetTensor::zeros(d, 4, ar, o));
    }
    let gt = gamma.truncate(o);
    let dgam: Vec<JetTensor> = (0..d)
        .map(|a| gamma.map(|j| j.partial(a).expect("order checked")))
        .collect();
    let gl = g.truncate(o);
    let mut out = JetTensor::zeros(d, 4, ar, o);
    for i in 0..d {
        for j in (i + 1)..d {
            for k in 0..d {
                // raised R_{ijk}^l for all l
                let up: Vec<Jet> = (0..d)
                    .map(|l| {
                        let mut acc = dgam[i].get(&[l, j, k]) - dgam[j].get(&[l, i, k]);
                        for m in 0..d {
                            let a = gt.get(&[m, j, k]);
                            if !a.is_zero() {
                                acc = acc + a * gt.get(&[l, i, m]);
                            }
                            let b = gt.get(&[m, i, k]);
                            if !b.is_zero() {
                                acc = acc - b * gt.get(&[l, j, m]);
                            }
                        }
                        acc
                    })
                    .collect();
                for l in 0..d {
                    let mut acc = Jet::zero(ar, o);
                    for (m, u) in up.iter().enumerate() {
                        if !u.is_zero() {
                            acc = acc + u * gl.get(&[m, l]);
                        }
                    }
                    out.set(&[j, i, k, l], -&acc);
                    out.set(&[i, j, k, l], acc);
                }
            }
        }
    }
    Ok(out)
}

/// `(A⊘g)_{ijkl} = A_{ik}g_{jl} - A_{jk}g_{il} + A_{jl}g_{ik} - A_{il}g_{jk}`.
pub fn kulkarni_nomizu(a: &JetTensor, g: &JetTensor) -> JetTensor {
    let d = a.dim();
    JetTensor::from_fn(d, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let s = a.get(&[i, k]) * g.get(&[j, l]) - a.get(&[j, k]) * g.get(&[i, l]);
        let t = a.get(&[j, l]) * g.get(&[i, k]) - a.get(&[i, l]) * g.get(&[j, k]);
        s + t
    })
}

pub fn kulkarni_nomizu_t(a: &Tensor, g: &Tensor) -> Tensor {
    let d = a.dim();
    Tensor::from_fn(d, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        a.get(&[i, k]) * g.get(&[j, l]) - a.get(&[j, k]) * g.get(&[i, l]) + a.get(&[j, l]) * g.get(&[i, k])
            - a.get(&[i, l]) * g.get(&[j, k])
    })
}

/// Ricci, scalar curvature, Schouten and Weyl tensors from the lowered Riemann tensor.
pub fn curvature_parts(riem: &JetTensor, g: &JetTensor, ginv: &JetTensor) -> (JetTensor, Jet, JetTensor, JetTensor) {
    let d = riem.dim();
    let o = riem.order();
    let gi = ginv.truncate(o);
    let gl = g.truncate(o);
    let ric = riem.trace(0, 3, Some(&gi));
    let scal = ric.trace(0, 1, Some(&gi)).as_scalar().clone();
    let nn = d as f64;
    let j = scal.scale(1.0 / (2.0 * (nn - 1.0)));
    let schouten = if d > 2 {
        JetTensor::from_fn(d, 2, |x| (ric.get(x) - &(gl.get(x) * &j)).scale(1.0 / (nn - 2.0)))
    } else {
        JetTensor::zeros(d, 2, riem.arity(), o)
    };
    let mut weyl = riem.clone();
    if d > 2 {
        weyl.axpy(1.0, &kulkarni_nomizu(&schouten, &gl));
    }
    (ric, scal, schouten, weyl)
}

impl AmbientJets {
    pub fn new(metric: &MetricField, y0: &[f64], order: usize) -> Result<AmbientJets> {
        if order < 2 {
            return Err(Error::order(2, order, "ambient curvature"));
        }
        let g = metric.lift(y0, order)?;
        AmbientJets::from_metric_jets(g, y0, metric.is_constant())
    }

    pub fn from_metric_jets(g: JetTensor, y0: &[f64], flat: bool) -> Result<AmbientJets> {
        let d = g.dim();
        let order = g.order();
        let ginv = mat_inverse(&g)?;
        let gamma = christoffel(&g, &ginv)?;
        let riem = riemann(&g, &gamma)?;
        let (ric, scal, schouten, weyl) = curvature_parts(&riem, &g, &ginv);
        let nabla_ric = if ric.order() >= 1 { Some(cov_deriv(&ric, &gamma)?) } else { None };
        Ok(AmbientJets {
            dim: d,
            order,
            base: y0.to_vec(),
            g,
            ginv,
            gamma,
            riem,
            ric,
            scal,
            schouten,
            weyl,
            nabla_ric,
            flat,
        })
    }

    pub fn jbar(&self) -> Jet {
        self.scal.scale(1.0 / (2.0 * (self.dim as f64 - 1.0)))
    }

    /// Point values in ambient coordinates.
    pub fn point(&self) -> Result<AmbientPoint> {
        let d = self.dim;
        let gamma0 = self.gamma.value();
        let need = |what: &str, o: usize| {
            if self.order < o {
                Err(Error::order(o, self.order, what))
            } else {
                Ok(())
            }
        };
        need("ambient curvature derivatives", 3)?;
        let nabla_riem = cov_deriv_at(&self.riem, &gamma0)?;
        let nabla_weyl = cov_deriv_at(&self.weyl, &gamma0)?;
        let nabla_schouten = cov_deriv_at(&self.schouten, &gamma0)?;
        let nr = self.nabla_ric.as_ref().expect("order 3");
        let dscal_j = JetTensor::try_from_fn(d, 1, |i| self.scal.partial(i[0]))?;
        let (nabla2_ric, hess_scal) = if self.order >= 4 {
            (Some(cov_deriv_at(nr, &gamma0)?), Some(cov_deriv_at(&dscal_j, &gamma0)?))
        } else {
            (None, None)
        };
        Ok(AmbientPoint {
            dim: d,
            g: self.g.value(),
            gamma: gamma0,
            riem: self.riem.value(),
            ric: self.ric.value(),
            scal: self.scal.value(),
            schouten: self.schouten.value(),
            weyl: self.weyl.value(),
            nabla_riem,
            nabla_weyl,
            nabla_schouten,
            nabla_ric: nr.value(),
            nabla2_ric,
            dscal: dscal_j.value(),
            hess_scal,
        })
    }
}

/// Curvature and its derivatives at one point, ambient coordinate components.
#[derive(Clone, Debug)]
pub struct AmbientPoint {
    pub dim: usize,
    pub g: Tensor,
    pub gamma: Tensor,
    pub riem: Tensor,
    pub ric: Tensor,
    pub scal: f64,
    pub schouten: Tensor,
    pub weyl: Tensor,
    pub nabla_riem: Tensor,
    pub nabla_weyl: Tensor,
    pub nabla_schouten: Tensor,
    pub nabla_ric: Tensor,
    pub nabla2_ric: Option<Tensor>,
    pub dscal: Tensor,
    pub hess_scal: Option<Tensor>,
}

/// Ambient curvature in an adapted orthonormal frame `(N, e_1, .., e_n)`.
/// Index 0 is the normal; tangential indices are `1..=n`.
#[derive(Clone, Debug)]
pub struct AmbientStack {
    pub dim: usize,
    pub riem: Tensor,
    pub ric: Tensor,
    pub scal: f64,
    pub jbar: f64,
    pub schouten: Tensor,
    pub weyl: Tensor,
    pub einstein: Tensor,
    pub nabla_riem: Tensor,
    pub nabla_weyl: Tensor,
    pub nabla_schouten: Tensor,
    pub nabla_ric: Tensor,
    pub nabla2_ric: Option<Tensor>,
    pub dscal: Tensor,
    pub hess_scal: Option<Tensor>,
}

impl AmbientStack {
    /// `frame[a][A]` holds the ambient coordinate components of frame vector `A`.
    pub fn from_point(p: &AmbientPoint, frame: &Tensor) -> AmbientStack {
        let d = p.dim;
        let ric = p.ric.transform(frame);
        let einstein = {
            let mut e = ric.clone();
            e.axpy(-0.5 * p.scal, &Tensor::identity(d));
            e
        };
        AmbientStack {
            dim: d,
            riem: p.riem.transform(frame),
            ric,
            scal: p.scal,
            jbar: p.scal / (2.0 * (d as f64 - 1.0)),
            schouten: p.schouten.transform(frame),
            weyl: p.weyl.transform(frame),
            einstein,
            nabla_riem: p.nabla_riem.transform(frame),
            nabla_weyl: p.nabla_weyl.transform(frame),
            nabla_schouten: p.nabla_schouten.transform(frame),
            nabla_ric: p.nabla_ric.transform(frame),
            nabla2_ric: p.nabla2_ric.as_ref().map(|t| t.transform(frame)),
            dscal: p.dscal.transform(frame),
            hess_scal: p.hess_scal.as_ref().map(|t| t.transform(frame)),
        }
    }

    pub fn n(&self) -> usize {
        self.dim - 1
    }

    /// Tangential block of a frame tensor with selected slots fixed to the normal.
    pub fn tang(&self, t: &Tensor, normal_slots: &[usize]) -> Tensor {
        let pattern: Vec<Option<usize>> =
            (0..t.rank()).map(|s| if normal_slots.contains(&s) { Some(0) } else { None }).collect();
        t.restrict(&pattern, 1, self.dim)
    }

    /// `Ḡ_{ij} = R̄_{0ij0}`.
    pub fn g_normal(&self) -> Tensor {
        self.tang(&self.riem, &[0, 3])
    }

    /// `𝒲_{ij} = W̄_{0ij0}`.
    pub fn w_normal(&self) -> Tensor {
        self.tang(&self.weyl, &[0, 3])
    }

    /// `(W̄_0)_{ijk} = W̄_{ijk0}`.
    pub fn w0(&self) -> Tensor {
        self.tang(&self.weyl, &[3])
    }

    /// `R̄_{ijk0}`.
    pub fn r0(&self) -> Tensor {
        self.tang(&self.riem, &[3])
    }

    /// Tangential part of the ambient Riemann tensor.
    pub fn riem_t(&self) -> Tensor {
        self.tang(&self.riem, &[])
    }

    pub fn weyl_t(&self) -> Tensor {
        self.tang(&self.weyl, &[])
    }

    pub fn ric_t(&self) -> Tensor {
        self.tang(&self.ric, &[])
    }

    pub fn schouten_t(&self) -> Tensor {
        self.tang(&self.schouten, &[])
    }

    pub fn ric0(&self) -> Tensor {
        self.tang(&self.ric, &[1])
    }

    pub fn p0(&self) -> Tensor {
        self.tang(&self.schouten, &[1])
    }

    pub fn ric00(&self) -> f64 {
        self.ric.get(&[0, 0])
    }

    pub fn p00(&self) -> f64 {
        self.schouten.get(&[0, 0])
    }

    /// `∇̄_0 Ric̄_{00}`.
    pub fn d0_ric00(&self) -> f64 {
        self.nabla_ric.get(&[0, 0, 0])
    }

    /// `∇̄²_{00} Ric̄_{00}`.
    pub fn d00_ric00(&self) -> Result<f64> {
        self.nabla2_ric
            .as_ref()
            .map(|t| t.get(&[0, 0, 0, 0]))
            .ok_or_else(|| Error::order(4, 3, "second normal derivative of Ricci"))
    }

    /// Normal derivative of the scalar curvature.
    pub fn scal_p(&self) -> f64 {
        self.dscal.get(&[0])
    }

    pub fn scal_pp(&self) -> Result<f64> {
        self.hess_scal
            .as_ref()
            .map(|t| t.get(&[0, 0]))
            .ok_or_else(|| Error::order(4, 3, "second normal derivative of scalar curvature"))
    }

    pub fn jbar_p(&self) -> f64 {
        self.scal_p() / (2.0 * self.n() as f64)
    }

    pub fn jbar_pp(&self) -> Result<f64> {
        Ok(self.scal_pp()? / (2.0 * self.n() as f64))
    }

    /// `∇̄_0(R̄)_{0ij0}` on tangential `i, j`.
    pub fn d0_r0ij0(&self) -> Tensor {
        self.tang(&self.nabla_riem, &[0, 1, 4])
    }

    /// `∇̄_0(W̄)_{0ij0}`.
    pub fn d0_w0ij0(&self) -> Tensor {
        self.tang(&self.nabla_weyl, &[0, 1, 4])
    }

    /// `∇̄_0(Ric̄)` with tangential slots.
    pub fn d0_ric_t(&self) -> Tensor {
        self.tang(&self.nabla_ric, &[0])
    }

    /// Divergence `∇̄^d W̄_{abcd}` over all ambient directions.
    pub fn div_weyl(&self) -> Tensor {
        let d = self.dim;
        Tensor::from_fn(d, 3, |x| (0..d).map(|k| self.nabla_weyl.get(&[k, x[0], x[1], x[2], k])).sum())
    }

    /// Cotton tensor `C_{abc} = ∇_a P_{bc} - ∇_b P_{ac}` from the Schouten derivative.
    pub fn cotton(&self) -> Tensor {
        let d = self.dim;
        Tensor::from_fn(d, 3, |x| {
            self.nabla_schouten.get(&[x[0], x[1], x[2]]) - self.nabla_schouten.get(&[x[1], x[0], x[2]])
        })
    }

    pub fn is_flat(&self, tol: f64) -> bool {
        self.riem.max_abs() < tol
    }

    pub fn is_einstein(&self, tol: f64) -> bool {
        let mut t = self.ric.clone();
        t.axpy(-self.scal / self.dim as f64, &Tensor::identity(self.dim));
        t.max_abs() < tol
    }

    pub fn is_conformally_flat(&self, tol: f64) -> bool {
        if self.dim > 3 {
            self.weyl.max_abs() < tol
        } else {
            self.cotton().max_abs() < tol
        }
    }

    pub fn summary(&self) -> String {
        format!("scal {:.6e}, |W| {:.3e}", self.scal, libm::sqrt(self.weyl.norm2()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_stereo(dim: usize) -> MetricField {
        // round unit sphere: 4δ/(1+|y|²)²
        let r2 = (0..dim).map(|i| alloc::format!("x{}^2", i + 1)).collect::<Vec<_>>().join("+");
        let c = alloc::format!("4/(1+{})^2", r2);
        let comps: Vec<String> = (0..dim * dim)
            .map(|k| if k / dim == k % dim { c.clone() } else { "0".into() })
            .collect();
        let refs: Vec<&str> = comps.iter().map(|s| s.as_str()).collect();
        MetricField::parse(dim, &refs, &[]).unwrap()
    }

    #[test]
    fn unit_sphere_curvature() {
        let m = sphere_stereo(4);
        let y0 = [0.1, -0.2, 0.3, 0.05];
        let a = AmbientJets::new(&m, &y0, 4).unwrap();
        let g = a.g.value();
        let r = a.riem.value();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let e = g.get(&[j, k]) * g.get(&[i, l]) - g.get(&[i, k]) * g.get(&[j, l]);
                        assert!((r.get(&[i, j, k, l]) - e).abs() < 1e-12);
                    }
                }
            }
        }
        assert!((a.scal.value() - 12.0).abs() < 1e-12);
        assert!(a.weyl.value().max_abs() < 1e-12);
        let p = a.point().unwrap();
        assert!(p.nabla_riem.max_abs() < 1e-11);
        assert!(p.nabla2_ric.unwrap().max_abs() < 1e-10);
    }
}
