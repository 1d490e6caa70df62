//! Dense real tensors of fixed dimension and a small `einsum`.
//!
//! Components are stored row-major, first index slowest. Once values are
//! expressed in an orthonormal frame there is no distinction between upper
//! and lower indices, which is how everything downstream uses them.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    data: Vec<f64>,
}

fn pow(d: usize, r: usize) -> usize {
    (0..r).fold(1, |a, _| a * d)
}

impl Tensor {
    pub fn zeros(dim: usize, rank: usize) -> Tensor {
        Tensor { dim, rank, data: vec![0.0; pow(dim, rank)] }
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor { dim: 1, rank: 0, data: vec![v] }
    }

    pub fn from_vec(dim: usize, rank: usize, data: Vec<f64>) -> Tensor {
        assert_eq!(data.len(), pow(dim, rank));
        Tensor { dim, rank, data }
    }

    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Tensor {
        let mut t = Tensor::zeros(dim, rank);
        let mut idx = vec![0usize; rank];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            for s in (0..rank).rev() {
                idx[s] += 1;
                if idx[s] < dim {
                    break;
                }
                idx[s] = 0;
            }
        }
        t
    }

    pub fn identity(dim: usize) -> Tensor {
        Tensor::from_fn(dim, 2, |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn value(&self) -> f64 {
        assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |o, &i| o * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { dim: self.dim, rank: self.rank, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, a: f64) -> Tensor {
        self.map(|x| a * x)
    }

    pub fn axpy(&mut self, a: f64, o: &Tensor) {
        assert_eq!((self.dim, self.rank), (o.dim, o.rank), "tensor shape mismatch");
        for (s, v) in self.data.iter_mut().zip(&o.data) {
            *s += a * v;
        }
    }

    /// Sum of squares of components (the full norm in an orthonormal frame).
    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Full contraction with a tensor of the same shape.
    pub fn dot(&self, o: &Tensor) -> f64 {
        assert_eq!((self.dim, self.rank), (o.dim, o.rank), "tensor shape mismatch");
        self.data.iter().zip(&o.data).map(|(a, b)| a * b).sum()
    }

    /// Reorder indices: `out[i_perm[0], i_perm[1], ..] = self[i_0, i_1, ..]`,
    /// i.e. slot `s` of `self` becomes slot `perm[s]` of the result.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.rank);
        let mut out = Tensor::zeros(self.dim, self.rank);
        let mut dst = vec![0usize; self.rank];
        let mut idx = vec![0usize; self.rank];
        for k in 0..self.data.len() {
            for s in 0..self.rank {
                dst[perm[s]] = idx[s];
            }
            let o = out.offset(&dst);
            out.data[o] = self.data[k];
            for s in (0..self.rank).rev() {
                idx[s] += 1;
                if idx[s] < self.dim {
                    break;
                }
                idx[s] = 0;
            }
        }
        out
    }

    /// Matrix trace of a rank-2 tensor.
    pub fn trace(&self) -> f64 {
        assert_eq!(self.rank, 2);
        (0..self.dim).map(|i| self.get(&[i, i])).sum()
    }

    pub fn transpose(&self) -> Tensor {
        assert_eq!(self.rank, 2);
        self.permute(&[1, 0])
    }

    pub fn sym(&self) -> Tensor {
        (self + &self.transpose()).scale(0.5)
    }

    /// Trace-free part of a rank-2 tensor.
    pub fn trace_free(&self) -> Tensor {
        let t = self.trace() / self.dim as f64;
        let mut out = self.clone();
        for i in 0..self.dim {
            let o = out.offset(&[i, i]);
            out.data[o] -= t;
        }
        out
    }

    pub fn matmul(&self, o: &Tensor) -> Tensor {
        ein("ij,jk->ik", &[self, o])
    }

    /// Sub-tensor with every index restricted to `range` (e.g. tangential slots).
    pub fn block(&self, lo: usize, hi: usize) -> Tensor {
        let d = hi - lo;
        Tensor::from_fn(d, self.rank, |i| {
            let full: Vec<usize> = i.iter().map(|x| x + lo).collect();
            self.get(&full)
        })
    }

    /// Fix some slots to given values and keep the rest restricted to
    /// `lo..hi`. `pattern` has one entry per slot: `Some(v)` fixes the slot.
    pub fn restrict(&self, pattern: &[Option<usize>], lo: usize, hi: usize) -> Tensor {
        assert_eq!(pattern.len(), self.rank);
        let free = pattern.iter().filter(|p| p.is_none()).count();
        let mut full = vec![0usize; self.rank];
        Tensor::from_fn(hi - lo, free, |i| {
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
            self.get(&full)
        })
    }

    /// Change of basis on every slot: `out_{A..} = Σ t_{a..} F[a][A] ..`.
    pub fn transform(&self, f: &Tensor) -> Tensor {
        assert_eq!(f.rank, 2);
        let mut cur = self.clone();
        for s in 0..self.rank {
            cur = cur.transform_slot(s, f);
        }
        cur
    }

    /// Change of basis on one slot. `f` is `old_dim × new_dim`, stored with
    /// the square dimension of the larger of the two.
    pub fn transform_slot(&self, slot: usize, f: &Tensor) -> Tensor {
        let d = self.dim;
        let mut out = Tensor::zeros(d, self.rank);
        let stride = pow(d, self.rank - 1 - slot);
        for k in 0..self.data.len() {
            let v = self.data[k];
            if v == 0.0 {
                continue;
            }
            let a = (k / stride) % d;
            let base = k - a * stride;
            for b in 0..d {
                out.data[base + b * stride] += v * f.data[a * d + b];
            }
        }
        out
    }
}

impl Index<&[usize]> for Tensor {
    type Output = f64;
    fn index(&self, idx: &[usize]) -> &f64 {
        &self.data[self.offset(idx)]
    }
}

impl IndexMut<&[usize]> for Tensor {
    fn index_mut(&mut self, idx: &[usize]) -> &mut f64 {
        let o = self.offset(idx);
        &mut self.data[o]
    }
}

impl Add for &Tensor {
    type Output = Tensor;
    fn add(self, o: &Tensor) -> Tensor {
        let mut r = self.clone();
        r.axpy(1.0, o);
        r
    }
}

impl Sub for &Tensor {
    type Output = Tensor;
    fn sub(self, o: &Tensor) -> Tensor {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }
}

impl Neg for &Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Tensor {
    type Output = Tensor;
    fn mul(self, a: f64) -> Tensor {
        self.scale(a)
    }
}

impl Add for Tensor {
    type Output = Tensor;
    fn add(mut self, o: Tensor) -> Tensor {
        self.axpy(1.0, &o);
        self
    }
}

impl Sub for Tensor {
    type Output = Tensor;
    fn sub(mut self, o: Tensor) -> Tensor {
        self.axpy(-1.0, &o);
        self
    }
}

impl Mul<f64> for Tensor {
    type Output = Tensor;
    fn mul(self, a: f64) -> Tensor {
        self.scale(a)
    }
}

/// Einstein summation over orthonormal-frame components.
///
/// `spec` looks like `"ij,jk->ik"`; without `->` the result is a scalar
/// (rank 0). Repeated letters are summed, all operands share one dimension.
pub fn ein(spec: &str, ops: &[&Tensor]) -> Tensor {
    let (lhs, rhs) = match spec.find("->") {
        Some(p) => (&spec[..p], &spec[p + 2..]),
        None => (spec, ""),
    };
    let terms: Vec<&[u8]> = lhs.split(',').map(|s| s.trim().as_bytes()).collect();
    assert_eq!(terms.len(), ops.len(), "einsum operand count in `{}`", spec);
    let out: &[u8] = rhs.trim().as_bytes();
    let d = ops[0].dim;
    let mut letters: Vec<u8> = Vec::new();
    for t in terms.iter().chain(core::iter::once(&out)) {
        for &c in t.iter() {
            if !letters.contains(&c) {
                letters.push(c);
            }
        }
    }
    for (t, op) in terms.iter().zip(ops) {
        assert_eq!(t.len(), op.rank, "einsum rank mismatch in `{}`", spec);
        assert_eq!(op.dim, d, "einsum dimension mismatch in `{}`", spec);
    }
    let strides = |t: &[u8]| -> Vec<usize> {
        let mut s = vec![0usize; letters.len()];
        let mut w = 1;
        for &c in t.iter().rev() {
            let l = letters.iter().position(|&x| x == c).unwrap();
            s[l] += w;
            w *= d;
        }
        s
    };
    let op_strides: Vec<Vec<usize>> = terms.iter().map(|t| strides(t)).collect();
    let out_strides = strides(out);
    let mut result = Tensor::zeros(d, out.len());
    let nl = letters.len();
    let mut idx = vec![0usize; nl];
    let mut offs = vec![0usize; ops.len()];
    let mut off_out = 0usize;
    let total = pow(d, nl);
    for _ in 0..total {
        let mut p = 1.0;
        for (k, op) in ops.iter().enumerate() {
            p *= op.data[offs[k]];
            if p == 0.0 {
                break;
            }
        }
        result.data[off_out] += p;
        for l in (0..nl).rev() {
            idx[l] += 1;
            for (k, s) in op_strides.iter().enumerate() {
                offs[k] += s[l];
            }
            off_out += out_strides[l];
            if idx[l] < d {
                break;
            }
            idx[l] = 0;
            for (k, s) in op_strides.iter().enumerate() {
                offs[k] -= s[l] * d;
            }
            off_out -= out_strides[l] * d;
        }
    }
    result
}

/// Scalar-valued [`ein`].
pub fn ein_s(spec: &str, ops: &[&Tensor]) -> f64 {
    ein(spec, ops).value()
}

/// Solve the symmetric positive definite system via Cholesky. Returns the lower factor.
pub fn cholesky(m: &Tensor) -> Option<Tensor> {
    let n = m.dim;
    let mut l = Tensor::zeros(n, 2);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.get(&[i, j]);
            for k in 0..j {
                s -= l.get(&[i, k]) * l.get(&[j, k]);
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l.set(&[i, i], libm::sqrt(s));
            } else {
                l.set(&[i, j], s / l.get(&[j, j]));
            }
        }
    }
    Some(l)
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(m: &Tensor) -> Option<Tensor> {
    let n = m.dim;
    let mut a = m.clone();
    let mut inv = Tensor::identity(n);
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a.get(&[x, c]).abs().total_cmp(&a.get(&[y, c]).abs()))?;
        if a.get(&[p, c]) == 0.0 {
            return None;
        }
        for k in 0..n {
            let (x, y) = (a.get(&[c, k]), a.get(&[p, k]));
            a.set(&[c, k], y);
            a.set(&[p, k], x);
            let (x, y) = (inv.get(&[c, k]), inv.get(&[p, k]));
            inv.set(&[c, k], y);
            inv.set(&[p, k], x);
        }
        let d = a.get(&[c, c]);
        for k in 0..n {
            a.set(&[c, k], a.get(&[c, k]) / d);
            inv.set(&[c, k], inv.get(&[c, k]) / d);
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = a.get(&[r, c]);
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a.set(&[r, k], a.get(&[r, k]) - f * a.get(&[c, k]));
                inv.set(&[r, k], inv.get(&[r, k]) - f * inv.get(&[c, k]));
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn einsum_matches_loops() {
        let a = Tensor::from_fn(3, 2, |i| (i[0] * 3 + i[1]) as f64);
        let b = Tensor::from_fn(3, 2, |i| 1.0 + (i[0] as f64) - 2.0 * i[1] as f64);
        let c = ein("ij,jk->ik", &[&a, &b]);
        for i in 0..3 {
            for k in 0..3 {
                let s: f64 = (0..3).map(|j| a.get(&[i, j]) * b.get(&[j, k])).sum();
                assert_eq!(c.get(&[i, k]), s);
            }
        }
        assert_eq!(ein_s("ii", &[&a]), a.trace());
        let t = ein("ij->ji", &[&a]);
        assert_eq!(t, a.transpose());
    }

    #[test]
    fn permute_moves_slots() {
        let a = Tensor::from_fn(2, 3, |i| (i[0] * 4 + i[1] * 2 + i[2]) as f64);
        let p = a.permute(&[2, 0, 1]);
        assert_eq!(p.get(&[1, 1, 0]), a.get(&[0, 1, 1]));
    }

    #[test]
    fn cholesky_and_inverse() {
        let m = Tensor::from_vec(2, 2, vec![4.0, 2.0, 2.0, 3.0]);
        let l = cholesky(&m).unwrap();
        assert!((&l.matmul(&l.transpose()) - &m).max_abs() < 1e-15);
        let i = inverse(&m).unwrap();
        assert!((&i.matmul(&m) - &Tensor::identity(2)).max_abs() < 1e-15);
    }
}
