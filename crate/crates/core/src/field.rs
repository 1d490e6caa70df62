//! Tensor fields whose components are jets, and covariant derivatives.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct JetTensor {
    dim: usize,
    rank: usize,
    data: Vec<Jet>,
}

fn pow(d: usize, r: usize) -> usize {
    (0..r).fold(1, |a, _| a * d)
}

fn unravel(mut k: usize, dim: usize, rank: usize, idx: &mut [usize]) {
    for s in (0..rank).rev() {
        idx[s] = k % dim;
        k /= dim;
    }
}

impl JetTensor {
    pub fn zeros(dim: usize, rank: usize, arity: usize, order: usize) -> JetTensor {
        JetTensor { dim, rank, data: vec![Jet::zero(arity, order); pow(dim, rank)] }
    }

    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> JetTensor {
        let n = pow(dim, rank);
        let mut idx = vec![0usize; rank];
        let mut data = Vec::with_capacity(n);
        for k in 0..n {
            unravel(k, dim, rank, &mut idx);
            data.push(f(&idx));
        }
        JetTensor { dim, rank, data }
    }

    pub fn try_from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Result<Jet>) -> Result<JetTensor> {
        let n = pow(dim, rank);
        let mut idx = vec![0usize; rank];
        let mut data = Vec::with_capacity(n);
        for k in 0..n {
            unravel(k, dim, rank, &mut idx);
            data.push(f(&idx)?);
        }
        Ok(JetTensor { dim, rank, data })
    }

    pub fn from_vec(dim: usize, rank: usize, data: Vec<Jet>) -> JetTensor {
        assert_eq!(data.len(), pow(dim, rank));
        JetTensor { dim, rank, data }
    }

    /// Rank-0 field; its dimension is the number of jet variables.
    pub fn scalar(j: Jet) -> JetTensor {
        JetTensor { dim: j.arity(), rank: 0, data: vec![j] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn arity(&self) -> usize {
        self.data[0].arity()
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(|j| j.order()).min().unwrap_or(0)
    }

    pub fn comps(&self) -> &[Jet] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |o, &i| o * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], j: Jet) {
        let o = self.offset(idx);
        self.data[o] = j;
    }

    /// The scalar of a rank-0 field.
    pub fn as_scalar(&self) -> &Jet {
        assert_eq!(self.rank, 0);
        &self.data[0]
    }

    /// Component values at the base point.
    pub fn value(&self) -> Tensor {
        Tensor::from_vec(self.dim, self.rank, self.data.iter().map(|j| j.value()).collect())
    }

    pub fn truncate(&self, order: usize) -> JetTensor {
        self.map(|j| j.truncate(order))
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> JetTensor {
        JetTensor { dim: self.dim, rank: self.rank, data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, a: f64) -> JetTensor {
        self.map(|j| j.scale(a))
    }

    pub fn mul_jet(&self, f: &Jet) -> JetTensor {
        self.map(|j| j * f)
    }

    pub fn axpy(&mut self, a: f64, o: &JetTensor) {
        assert_eq!((self.dim, self.rank), (o.dim, o.rank), "field shape mismatch");
        for (s, v) in self.data.iter_mut().zip(&o.data) {
            s.axpy(a, v);
        }
    }

    pub fn add(&self, o: &JetTensor) -> JetTensor {
        let mut r = self.clone();
        r.axpy(1.0, o);
        r
    }

    pub fn sub(&self, o: &JetTensor) -> JetTensor {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|j| j.is_zero())
    }

    /// Reorder slots; slot `s` of `self` becomes slot `perm[s]`.
    pub fn permute(&self, perm: &[usize]) -> JetTensor {
        let mut src = vec![0usize; self.rank];
        JetTensor::from_fn(self.dim, self.rank, |dst| {
            for s in 0..self.rank {
                src[s] = dst[perm[s]];
            }
            self.get(&src).clone()
        })
    }

    /// Contract slot `slot` with the vector field `v`.
    pub fn contract(&self, slot: usize, v: &[Jet]) -> JetTensor {
        assert_eq!(v.len(), self.dim);
        let mut full = vec![0usize; self.rank];
        JetTensor::from_fn(self.dim, self.rank - 1, |i| {
            let mut k = 0;
            for (s, f) in full.iter_mut().enumerate() {
                if s != slot {
                    *f = i[k];
                    k += 1;
                }
            }
            let mut acc: Option<Jet> = None;
            for (a, va) in v.iter().enumerate() {
                full[slot] = a;
                let c = self.get(&full);
                if c.is_zero() || va.is_zero() {
                    continue;
                }
                let p = c * va;
                acc = Some(match acc {
                    None => p,
                    Some(s) => s + p,
                });
            }
            acc.unwrap_or_else(|| {
                let o = self.order().min(v.iter().map(|x| x.order()).min().unwrap());
                Jet::zero(self.arity(), o)
            })
        })
    }

    /// Trace over two slots, which must come from an orthonormal or
    /// already-raised setting; with `inv` given, the contraction uses it.
    pub fn trace(&self, s1: usize, s2: usize, inv: Option<&JetTensor>) -> JetTensor {
        assert!(s1 < s2 && s2 < self.rank);
        let mut full = vec![0usize; self.rank];
        let d = self.dim;
        JetTensor::from_fn(d, self.rank - 2, |i| {
            let mut k = 0;
            for (s, f) in full.iter_mut().enumerate() {
                if s != s1 && s != s2 {
                    *f = i[k];
                    k += 1;
                }
            }
            let mut acc = Jet::zero(self.arity(), self.order());
            for a in 0..d {
                for b in 0..d {
                    let w = match inv {
                        Some(g) => g.get(&[a, b]).clone(),
                        None if a == b => Jet::constant(self.arity(), self.order(), 1.0),
                        None => continue,
                    };
                    full[s1] = a;
                    full[s2] = b;
                    acc = acc + self.get(&full) * &w;
                }
            }
            acc
        })
    }

    /// Change of basis on one slot with a square matrix field `f[a][A]`.
    pub fn transform_slot(&self, slot: usize, f: &JetTensor) -> JetTensor {
        let mut full = vec![0usize; self.rank];
        let d = self.dim;
        JetTensor::from_fn(d, self.rank, |i| {
            full.copy_from_slice(i);
            let mut acc: Option<Jet> = None;
            for a in 0..d {
                full[slot] = a;
                let c = self.get(&full);
                let m = f.get(&[a, i[slot]]);
                if c.is_zero() || m.is_zero() {
                    continue;
                }
                let p = c * m;
                acc = Some(match acc {
                    None => p,
                    Some(s) => s + p,
                });
            }
            acc.unwrap_or_else(|| Jet::zero(self.arity(), self.order().min(f.order())))
        })
    }

    pub fn transform(&self, f: &JetTensor) -> JetTensor {
        let mut cur = self.clone();
        for s in 0..self.rank {
            cur = cur.transform_slot(s, f);
        }
        cur
    }

    /// Fix the slots marked `Some(v)`, keep the others restricted to `lo..dim`.
    pub fn restrict(&self, pattern: &[Option<usize>], lo: usize) -> JetTensor {
        assert_eq!(pattern.len(), self.rank);
        let free = pattern.iter().filter(|p| p.is_none()).count();
        let mut full = vec![0usize; self.rank];
        JetTensor::from_fn(self.dim - lo, free, |i| {
            let mut k = 0;
            for (s, p) in pattern.iter().enumerate() {
                full[s] = match p {
                    Some(v) => *v,
                    None => {
                        k += 1;
                        i[k - 1] + lo
                    }
                };
            }
            self.get(&full).clone()
        })
    }

    /// Tensor product with another field.
    pub fn outer(&self, o: &JetTensor) -> JetTensor {
        let r1 = self.rank;
        JetTensor::from_fn(self.dim, self.rank + o.rank, |i| self.get(&i[..r1]) * o.get(&i[r1..]))
    }
}

/// Inverse of a matrix of jets by elimination. No pivoting: the base-point
/// value must have nonzero leading minors, which holds for metrics.
pub fn mat_inverse(m: &JetTensor) -> Result<JetTensor> {
    let n = m.dim();
    let arity = m.arity();
    let order = m.order();
    let mut a: Vec<Jet> = m.comps().iter().map(|j| j.truncate(order)).collect();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(arity, order, if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for c in 0..n {
        let r = a[c * n + c].recip().map_err(|_| Error::Geometry(format!("matrix singular at pivot {}", c)))?;
        for k in 0..n {
            a[c * n + k] = &a[c * n + k] * &r;
            inv[c * n + k] = &inv[c * n + k] * &r;
        }
        for row in 0..n {
            if row == c || a[row * n + c].is_zero() {
                continue;
            }
            let f = a[row * n + c].clone();
            for k in 0..n {
                let t = &f * &a[c * n + k];
                a[row * n + k] = &a[row * n + k] - &t;
                let t = &f * &inv[c * n + k];
                inv[row * n + k] = &inv[row * n + k] - &t;
            }
        }
    }
    Ok(JetTensor::from_vec(n, 2, inv))
}

/// Determinant of a matrix of jets (product of elimination pivots).
pub fn mat_det(m: &JetTensor) -> Result<Jet> {
    let n = m.dim();
    let order = m.order();
    let mut a: Vec<Jet> = m.comps().iter().map(|j| j.truncate(order)).collect();
    let mut det = Jet::constant(m.arity(), order, 1.0);
    for c in 0..n {
        let p = a[c * n + c].clone();
        det = &det * &p;
        let r = p.recip().map_err(|_| Error::Geometry(format!("matrix singular at pivot {}", c)))?;
        for row in c + 1..n {
            if a[row * n + c].is_zero() {
                continue;
            }
            let f = &a[row * n + c] * &r;
            for k in c..n {
                let t = &f * &a[c * n + k];
                a[row * n + k] = &a[row * n + k] - &t;
            }
        }
    }
    Ok(det)
}

/// Christoffel symbols `Γ^k_{ij}` of a metric field, stored `[k][i][j]`.
pub fn christoffel(g: &JetTensor, ginv: &JetTensor) -> Result<JetTensor> {
    let d = g.dim();
    if g.order() == 0 {
        return Err(Error::order(1, 0, "Christoffel symbols"));
    }
    let dg: Vec<JetTensor> = (0..d)
        .map(|a| g.map(|j| j.partial(a).expect("order checked")))
        .collect();
    // first kind: Γ_{m,ij} = (∂_i g_mj + ∂_j g_mi - ∂_m g_ij)/2
    let first = JetTensor::from_fn(d, 3, |x| {
        let (m, i, j) = (x[0], x[1], x[2]);
        let s = dg[i].get(&[m, j]) + dg[j].get(&[m, i]);
        (&s - dg[m].get(&[i, j])).scale(0.5)
    });
    let inv = ginv.truncate(g.order() - 1);
    let flat = first.is_zero();
    Ok(JetTensor::from_fn(d, 3, |x| {
        let (k, i, j) = (x[0], x[1], x[2]);
        if flat {
            return Jet::zero(g.arity(), g.order() - 1);
        }
        let mut acc = Jet::zero(g.arity(), g.order() - 1);
        for m in 0..d {
            let f = first.get(&[m, i, j]);
            if !f.is_zero() {
                acc = acc + inv.get(&[k, m]) * f;
            }
        }
        acc
    }))
}

/// Covariant derivative of a covariant tensor field; the derivative index is
/// placed first: `(∇T)_{a i_1 .. i_r} = ∇_a T_{i_1 .. i_r}`.
pub fn cov_deriv(t: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    let d = t.dim();
    let r = t.rank();
    if t.order() == 0 {
        return Err(Error::order(1, 0, "covariant derivative"));
    }
    let o = t.order() - 1;
    let partials: Vec<Vec<Jet>> = (0..d)
        .map(|a| t.comps().iter().map(|j| j.partial(a).expect("order checked")).collect())
        .collect();
    let gam = gamma.truncate(o);
    let flat = gam.is_zero();
    let tt = t.truncate(o);
    let mut src = vec![0usize; r];
    JetTensor::try_from_fn(d, r + 1, |x| {
        let a = x[0];
        let idx = &x[1..];
        let off = idx.iter().fold(0, |acc, &i| acc * d + i);
        let mut acc = partials[a][off].clone();
        if flat {
            return Ok(acc);
        }
        for s in 0..r {
            src.copy_from_slice(idx);
            for m in 0..d {
                let g = gam.get(&[m, a, idx[s]]);
                if g.is_zero() {
                    continue;
                }
                src[s] = m;
                let c = tt.get(&src);
                if c.is_zero() {
                    continue;
                }
                acc = acc - g * c;
            }
        }
        Ok(acc)
    })
}

/// Covariant derivative at the base point only, from the linear Taylor
/// coefficients of `t` and the point value of the Christoffel symbols.
pub fn cov_deriv_at(t: &JetTensor, gamma0: &Tensor) -> Result<Tensor> {
    let d = t.dim();
    let r = t.rank();
    if t.order() == 0 {
        return Err(Error::order(1, 0, "covariant derivative"));
    }
    let v = t.value();
    let mut src = vec![0usize; r];
    Ok(Tensor::from_fn(d, r + 1, |x| {
        let a = x[0];
        let idx = &x[1..];
        let mut acc = t.get(idx).coeffs()[1 + a];
        for s in 0..r {
            src.copy_from_slice(idx);
            for m in 0..d {
                let g = gamma0.get(&[m, a, idx[s]]);
                if g == 0.0 {
                    continue;
                }
                src[s] = m;
                acc -= g * v.get(&src);
            }
        }
        acc
    }))
}
