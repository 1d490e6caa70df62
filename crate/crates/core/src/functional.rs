//! Integrals over closed hypersurfaces in a periodic chart and their normal
//! variations.
//!
//! A closed scenario is a graph `x_{n+1} = F(x)` over the torus `[0, 2π)^n`
//! inside an ambient metric that is `2π`-periodic in every chart variable.
//! Integrals use the tensor-product trapezoidal rule, which is spectrally
//! accurate for periodic analytic integrands. The varied hypersurfaces
//! `ι_t(x) = exp_{ι(x)}(t u(x) N(x))` are sampled on the grid by integrating
//! the geodesic equation, and their tangential derivatives are taken
//! spectrally.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::ambient::{AmbientJets, MetricField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fermi::exp_map;
use crate::field::{christoffel, mat_inverse};
use crate::geometry::{Geometry, Setup};
use crate::hypersurface::{Embedding, SurfaceJets};
use crate::jets::Jet;
use crate::obstruction::b3_final;
use crate::tensor::{cholesky, inverse, Tensor};

/// Runs independent per-index jobs. Results come back in index order, so a
/// sequential sum over them is deterministic however the jobs were scheduled.
pub trait Executor {
    fn map<T, F>(&self, len: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send;
}

pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}

/// Uniform grid with `size` points per axis on `[0, 2π)^n`, axis 0 slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
    pub size: usize,
}

impl Grid {
    pub fn new(n: usize, size: usize) -> Result<Grid> {
        if size < 4 || !size.is_multiple_of(2) {
            return Err(Error::Invalid(format!("grid size must be even and at least 4, got {}", size)));
        }
        Ok(Grid { n, size })
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        libm::pow(self.spacing(), self.n as f64)
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        let mut r = k;
        for a in (0..self.n).rev() {
            x[a] = (r % self.size) as f64 * self.spacing();
            r /= self.size;
        }
        x
    }

    /// Apply a circulant `size × size` matrix given by its first column along `axis`.
    fn apply_axis(&self, data: &[f64], axis: usize, col: &[f64]) -> Vec<f64> {
        let m = self.size;
        let stride = m.pow((self.n - 1 - axis) as u32);
        let mut out = vec![0.0; data.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let j = (k / stride) % m;
            let base = k - j * stride;
            let mut acc = 0.0;
            for (q, c) in col.iter().enumerate() {
                // entry (j, l) of a circulant depends on j - l
                let l = (j + m - q) % m;
                acc += c * data[base + l * stride];
            }
            *o = acc;
        }
        out
    }

    /// First column of the periodic spectral first-derivative matrix.
    fn d1_column(&self) -> Vec<f64> {
        let m = self.size;
        let h = self.spacing();
        (0..m)
            .map(|q| {
                if q == 0 {
                    0.0
                } else {
                    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                    0.5 * sign / libm::tan(q as f64 * h / 2.0)
                }
            })
            .collect()
    }

    /// First column of the periodic spectral second-derivative matrix.
    fn d2_column(&self) -> Vec<f64> {
        let m = self.size;
        let h = self.spacing();
        (0..m)
            .map(|q| {
                if q == 0 {
                    -PI * PI / (3.0 * h * h) - 1.0 / 6.0
                } else {
                    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                    let s = libm::sin(q as f64 * h / 2.0);
                    -0.5 * sign / (s * s)
                }
            })
            .collect()
    }

    /// Spectral first and second derivatives of periodic grid data:
    /// `(d[i], dd[i][j])`.
    pub fn derivatives(&self, data: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        let n = self.n;
        let c1 = self.d1_column();
        let c2 = self.d2_column();
        let d: Vec<Vec<f64>> = (0..n).map(|i| self.apply_axis(data, i, &c1)).collect();
        let mut dd = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            dd[i][i] = self.apply_axis(data, i, &c2);
            for j in i + 1..n {
                let m = self.apply_axis(&d[i], j, &c1);
                dd[j][i] = m.clone();
                dd[i][j] = m;
            }
        }
        (d, dd)
    }
}

/// Ambient metric, Christoffel symbols `Γ^a_{bc}` and Weyl tensor at one point.
#[derive(Clone, Debug)]
pub struct AmbientValues {
    pub g: Tensor,
    pub ginv: Tensor,
    pub gamma: Tensor,
    pub weyl: Tensor,
}

impl AmbientValues {
    pub fn at(metric: &MetricField, y: &[f64]) -> Result<AmbientValues> {
        let d = metric.dim();
        if metric.is_constant() {
            let g = metric.at(y)?;
            let ginv = inverse(&g).ok_or_else(|| Error::Geometry("ambient metric singular".into()))?;
            return Ok(AmbientValues { g, ginv, gamma: Tensor::zeros(d, 3), weyl: Tensor::zeros(d, 4) });
        }
        let a = AmbientJets::new(metric, y, 2)?;
        Ok(AmbientValues { g: a.g.value(), ginv: a.ginv.value(), gamma: a.gamma.value(), weyl: a.weyl.value() })
    }
}

/// Christoffel symbols `Γ^a_{bc}` of the ambient metric at `y`.
pub fn christoffel_at(metric: &MetricField, y: &[f64]) -> Result<Tensor> {
    if metric.is_constant() {
        return Ok(Tensor::zeros(metric.dim(), 3));
    }
    let g = metric.lift(y, 1)?;
    let ginv = mat_inverse(&g)?;
    Ok(christoffel(&g, &ginv)?.value())
}

/// Second-order data of an embedding at one point.
#[derive(Clone, Debug)]
pub struct TwoJet {
    pub y: Vec<f64>,
    /// `∂_i ι^a`, indexed `[a][i]`.
    pub d1: Vec<Vec<f64>>,
    /// `∂_i ∂_j ι^a`, indexed `[a][i][j]`.
    pub d2: Vec<Vec<Vec<f64>>>,
}

impl TwoJet {
    pub fn from_jets(iota: &[Jet]) -> TwoJet {
        let n = iota[0].arity();
        let unit = |i: usize, j: Option<usize>| {
            let mut e = [0u8; 8];
            e[i] += 1;
            if let Some(j) = j {
                e[j] += 1;
            }
            e
        };
        let y = iota.iter().map(|j| j.value()).collect();
        let d1 = iota.iter().map(|f| (0..n).map(|i| f.derivative(&unit(i, None)[..n])).collect()).collect();
        let d2 = iota
            .iter()
            .map(|f| (0..n).map(|i| (0..n).map(|j| f.derivative(&unit(i, Some(j))[..n])).collect()).collect())
            .collect();
        TwoJet { y, d1, d2 }
    }

    pub fn of(emb: &Embedding, x: &[f64]) -> Result<TwoJet> {
        Ok(TwoJet::from_jets(&emb.lift(x, 2)?))
    }
}

fn det(m: &Tensor) -> f64 {
    match m.dim() {
        1 => m.get(&[0, 0]),
        2 => m.get(&[0, 0]) * m.get(&[1, 1]) - m.get(&[0, 1]) * m.get(&[1, 0]),
        3 => det3(m),
        d => match cholesky(m) {
            Some(c) => {
                let p: f64 = (0..d).map(|i| c.get(&[i, i])).product();
                p * p
            }
            None => 0.0,
        },
    }
}

/// Pointwise first- and second-order quantities on the hypersurface, in chart
/// components.
#[derive(Clone, Debug)]
pub struct Local {
    pub n: usize,
    pub h: Tensor,
    pub hinv: Tensor,
    /// Unit normal as an ambient vector.
    pub normal: Vec<f64>,
    pub l: Tensor,
    pub mean: f64,
    pub lo: Tensor,
    /// `𝒲_{ij} = W̄(N, ∂_i, ∂_j, N)`.
    pub what: Tensor,
    /// `sqrt(det h)`.
    pub dvol: f64,
}

impl Local {
    pub fn new(jet: &TwoJet, amb: &AmbientValues, orientation: f64) -> Result<Local> {
        let big = jet.y.len();
        let n = big - 1;
        let d1 = &jet.d1;
        let g = &amb.g;
        let h = Tensor::from_fn(n, 2, |x| {
            let mut acc = 0.0;
            for a in 0..big {
                for b in 0..big {
                    acc += g.get(&[a, b]) * d1[a][x[0]] * d1[b][x[1]];
                }
            }
            acc
        });
        let dh = det(&h);
        if !(dh > 0.0) {
            return Err(Error::Geometry("induced metric degenerate".into()));
        }
        let hinv = inverse(&h).ok_or_else(|| Error::Geometry("induced metric singular".into()))?;
        // cofactor covector: det[∂ι | V] = V^a ν_a
        let nu: Vec<f64> = (0..big)
            .map(|a| {
                let minor = Tensor::from_fn(n, 2, |x| {
                    let r = if x[0] < a { x[0] } else { x[0] + 1 };
                    d1[r][x[1]]
                });
                let sign = if (a + n).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * det(&minor)
            })
            .collect();
        let raised: Vec<f64> = (0..big).map(|a| (0..big).map(|b| amb.ginv.get(&[a, b]) * nu[b]).sum()).collect();
        let len2: f64 = raised.iter().zip(&nu).map(|(r, v)| r * v).sum();
        if !(len2 > 0.0) {
            return Err(Error::Geometry("embedding Jacobian degenerate".into()));
        }
        let s = orientation / libm::sqrt(len2);
        let normal: Vec<f64> = raised.iter().map(|r| r * s).collect();
        let nflat: Vec<f64> = nu.iter().map(|v| v * s).collect();
        let gm = &amb.gamma;
        let l = Tensor::from_fn(n, 2, |x| {
            let (i, j) = (x[0], x[1]);
            let mut acc = 0.0;
            for a in 0..big {
                let mut t = jet.d2[a][i][j];
                for b in 0..big {
                    for c in 0..big {
                        t += gm.get(&[a, b, c]) * d1[b][i] * d1[c][j];
                    }
                }
                acc += nflat[a] * t;
            }
            -acc
        });
        let mean = hinv.dot(&l) / n as f64;
        let mut lo = l.clone();
        lo.axpy(-mean, &h);
        let w = &amb.weyl;
        let what = Tensor::from_fn(n, 2, |x| {
            let mut acc = 0.0;
            for a in 0..big {
                for b in 0..big {
                    for c in 0..big {
                        for dd in 0..big {
                            let v = w.get(&[a, b, c, dd]);
                            if v != 0.0 {
                                acc += v * normal[a] * d1[b][x[0]] * d1[c][x[1]] * normal[dd];
                            }
                        }
                    }
                }
            }
            acc
        });
        Ok(Local { n, h, hinv, normal, l, mean, lo, what, dvol: libm::sqrt(dh) })
    }

    fn mixed(&self, t: &Tensor) -> Tensor {
        self.hinv.matmul(t)
    }

    pub fn lo_norm2(&self) -> f64 {
        let a = self.mixed(&self.lo);
        a.matmul(&a).trace()
    }

    pub fn tr_lo3(&self) -> f64 {
        let a = self.mixed(&self.lo);
        a.matmul(&a).matmul(&a).trace()
    }

    /// `(ů, 𝒲)`.
    pub fn lo_what(&self) -> f64 {
        self.mixed(&self.lo).matmul(&self.mixed(&self.what)).trace()
    }

    pub fn w2_density(&self) -> f64 {
        self.lo_norm2()
    }

    pub fn w3_density(&self) -> f64 {
        self.tr_lo3() + self.lo_what()
    }
}

fn det3(m: &Tensor) -> f64 {
    let g = |i: usize, j: usize| m.get(&[i, j]);
    g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
        + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
}

/// Integrands available on closed scenarios. All are integrated against `dvol_h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    Volume,
    /// `|ů|²`, the Willmore-type energy density for surfaces.
    W2,
    /// `tr(ů³) + (ů, 𝒲)`.
    W3,
    /// `Δ(|ů|²) - 2δδ(ů²)`, a total divergence.
    DiffKey,
    /// `-4ů^{ij}∇^k W̄_{kij0} + 2|W̄_0|²`, a total divergence.
    WeylDivergence,
}

impl Integrand {
    pub fn name(self) -> &'static str {
        match self {
            Integrand::Volume => "volume",
            Integrand::W2 => "w2",
            Integrand::W3 => "w3",
            Integrand::DiffKey => "diff_key",
            Integrand::WeylDivergence => "weyl_divergence",
        }
    }

    pub fn parse(s: &str) -> Option<Integrand> {
        [Integrand::Volume, Integrand::W2, Integrand::W3, Integrand::DiffKey, Integrand::WeylDivergence]
            .into_iter()
            .find(|i| i.name() == s)
    }

    /// Jet order needed at each node, `None` for the second-order fast path.
    fn order(self) -> Option<usize> {
        match self {
            Integrand::DiffKey | Integrand::WeylDivergence => Some(4),
            _ => None,
        }
    }
}

/// A closed hypersurface in a periodic chart together with a variation direction.
#[derive(Clone, Debug)]
pub struct ClosedScenario {
    pub metric: MetricField,
    /// Height function of the graph, in `x1 .. xn`.
    pub height: Expr,
    /// Variation direction, a function of `x1 .. xn`.
    pub u: Expr,
    pub grid: Grid,
    embedding: Embedding,
}

const PERIOD_SAMPLES: [[f64; 4]; 3] = [[0.3, 1.1, 2.9, 4.4], [5.2, 0.7, 3.3, 1.9], [2.2, 4.8, 0.1, 5.9]];

impl ClosedScenario {
    pub fn new(metric: MetricField, height: Expr, u: Expr, grid: usize) -> Result<ClosedScenario> {
        let n = metric.dim() - 1;
        if !(2..=3).contains(&n) {
            return Err(Error::Scope(format!("closed scenarios need n = 2 or 3, got {}", n)));
        }
        let grid = Grid::new(n, grid)?;
        let embedding = Embedding::graph(n, height.clone());
        let sc = ClosedScenario { metric, height, u, grid, embedding };
        sc.check_periodic()?;
        Ok(sc)
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn with_grid(&self, size: usize) -> Result<ClosedScenario> {
        let mut s = self.clone();
        s.grid = Grid::new(self.grid.n, size)?;
        Ok(s)
    }

    pub fn with_metric(&self, metric: MetricField) -> Result<ClosedScenario> {
        ClosedScenario::new(metric, self.height.clone(), self.u.clone(), self.grid.size)
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn setup(&self) -> Setup {
        Setup::new(self.metric.clone(), self.embedding.clone())
    }

    /// Sampled check that the height, the direction and the metric are `2π`-periodic.
    pub fn check_periodic(&self) -> Result<()> {
        let n = self.n();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs());
        for s in PERIOD_SAMPLES {
            let x = &s[..n];
            for i in 0..n {
                let mut xs = x.to_vec();
                xs[i] += 2.0 * PI;
                for (name, e) in [("height", &self.height), ("variation direction", &self.u)] {
                    if !close(e.eval_f64(x)?, e.eval_f64(&xs)?) {
                        return Err(Error::Invalid(format!("{} is not 2π-periodic in x{}", name, i + 1)));
                    }
                }
            }
            let y = &s[..n + 1];
            let g0 = self.metric.at(y)?;
            for a in 0..=n {
                let mut ys = y.to_vec();
                ys[a] += 2.0 * PI;
                let g1 = self.metric.at(&ys)?;
                if g0.data().iter().zip(g1.data()).any(|(p, q)| !close(*p, *q)) {
                    return Err(Error::Invalid(format!("metric is not 2π-periodic in x{}", a + 1)));
                }
            }
        }
        Ok(())
    }

    fn local_at(&self, k: usize) -> Result<Local> {
        let x = self.grid.point(k);
        let jet = TwoJet::of(&self.embedding, &x)?;
        let amb = AmbientValues::at(&self.metric, &jet.y)?;
        Local::new(&jet, &amb, self.embedding.orientation())
    }

    fn density(&self, k: usize, what: Integrand) -> Result<f64> {
        match what.order() {
            None => {
                let loc = self.local_at(k)?;
                let f = match what {
                    Integrand::Volume => 1.0,
                    Integrand::W2 => loc.w2_density(),
                    _ => loc.w3_density(),
                };
                Ok(f * loc.dvol)
            }
            Some(order) => {
                let geo = Geometry::new(&self.setup(), &self.grid.point(k), order)?;
                let s = &geo.surface;
                let f = match what {
                    Integrand::DiffKey => s.lap_lo_norm2 - 2.0 * s.divdiv_lo2,
                    _ => -4.0 * s.lo.dot(&s.div_w0) + 2.0 * s.w0.norm2(),
                };
                Ok(f * geometry_dvol(&geo))
            }
        }
    }

    pub fn integrate(&self, what: Integrand, exec: &impl Executor) -> Result<f64> {
        if what == Integrand::W3 && self.n() != 3 {
            return Err(Error::Scope("the W3 energy is defined for n = 3".into()));
        }
        let vals = exec.map(self.grid.len(), |k| self.density(k, what))?;
        Ok(self.grid.weight() * vals.iter().sum::<f64>())
    }

    /// `∫ u B₃ dvol`, with `B₃` from the closed formula.
    pub fn u_b3(&self, exec: &impl Executor) -> Result<f64> {
        if self.n() != 3 {
            return Err(Error::Scope("B3 needs n = 3".into()));
        }
        let setup = self.setup();
        let vals = exec.map(self.grid.len(), |k| {
            let x = self.grid.point(k);
            let u = self.u.eval_f64(&x)?;
            if u == 0.0 {
                return Ok(0.0);
            }
            let geo = Geometry::new(&setup, &x, 5)?;
            Ok(u * b3_final(&geo)?.value * geometry_dvol(&geo))
        })?;
        Ok(self.grid.weight() * vals.iter().sum::<f64>())
    }

    /// Grid samples of `ι_t - ι`, one vector per node.
    fn displacement(&self, t: f64, exec: &impl Executor) -> Result<Vec<Vec<f64>>> {
        let orientation = self.embedding.orientation();
        exec.map(self.grid.len(), |k| {
            let x = self.grid.point(k);
            let jet = TwoJet::of(&self.embedding, &x)?;
            let amb = AmbientValues::at(&self.metric, &jet.y)?;
            let loc = Local::new(&jet, &amb, orientation)?;
            let u = self.u.eval_f64(&x)?;
            let v: Vec<f64> = loc.normal.iter().map(|c| u * c).collect();
            let end = geodesic(&self.metric, &jet.y, &v, t)?;
            Ok(end.iter().zip(&jet.y).map(|(a, b)| a - b).collect())
        })
    }

    /// The energy of `ι_t`.
    pub fn varied(&self, what: Integrand, t: f64, exec: &impl Executor) -> Result<f64> {
        if t == 0.0 {
            return self.integrate(what, exec);
        }
        if what.order().is_some() {
            return Err(Error::Invalid(format!("{} is not available on varied hypersurfaces", what.name())));
        }
        let big = self.n() + 1;
        let disp = self.displacement(t, exec)?;
        let mut d1 = Vec::with_capacity(big);
        let mut d2 = Vec::with_capacity(big);
        for a in 0..big {
            let comp: Vec<f64> = disp.iter().map(|v| v[a]).collect();
            let (p, q) = self.grid.derivatives(&comp);
            d1.push(p);
            d2.push(q);
        }
        let orientation = self.embedding.orientation();
        let n = self.n();
        let vals = exec.map(self.grid.len(), |k| {
            let x = self.grid.point(k);
            let mut jet = TwoJet::of(&self.embedding, &x)?;
            for a in 0..big {
                jet.y[a] += disp[k][a];
                for i in 0..n {
                    jet.d1[a][i] += d1[a][i][k];
                    for j in 0..n {
                        jet.d2[a][i][j] += d2[a][i][j][k];
                    }
                }
            }
            let amb = AmbientValues::at(&self.metric, &jet.y)?;
            let loc = Local::new(&jet, &amb, orientation).map_err(|e| match e {
                Error::Geometry(m) => Error::Geometry(format!("{} at t = {:e}; try a smaller step", m, t)),
                e => e,
            })?;
            let f = match what {
                Integrand::Volume => 1.0,
                Integrand::W2 => loc.w2_density(),
                _ => loc.w3_density(),
            };
            Ok(f * loc.dvol)
        })?;
        Ok(self.grid.weight() * vals.iter().sum::<f64>())
    }

    /// Finite-difference first variation of `W3` along `u`, compared with `-6 ∫ u B₃`.
    ///
    /// `steps` are the half-widths of the central differences, smallest first,
    /// each twice the previous. Two steps give one extrapolated value; four
    /// give a convergence-order estimate.
    pub fn normal_variation(&self, steps: &[f64], exec: &impl Executor) -> Result<Variation> {
        if steps.len() < 2 {
            return Err(Error::Invalid("normal variation needs at least two step sizes".into()));
        }
        for w in steps.windows(2) {
            if ((w[1] / w[0]) - 2.0).abs() > 1e-12 {
                return Err(Error::Invalid("step sizes must double".into()));
            }
        }
        let mut central = Vec::new();
        for &t in steps {
            let plus = self.varied(Integrand::W3, t, exec)?;
            let minus = self.varied(Integrand::W3, -t, exec)?;
            central.push((plus - minus) / (2.0 * t));
        }
        let richardson: Vec<f64> = central.windows(2).map(|w| (4.0 * w[0] - w[1]) / 3.0).collect();
        let order = |v: &[f64]| -> Option<f64> {
            if v.len() < 3 {
                return None;
            }
            let a = (v[1] - v[0]).abs();
            let b = (v[2] - v[1]).abs();
            if a == 0.0 || b == 0.0 {
                return None;
            }
            Some(libm::log2(b / a))
        };
        let rhs = 6.0 * self.u_b3(exec)?;
        let fd = richardson[0];
        Ok(Variation {
            steps: steps.to_vec(),
            central: central.clone(),
            richardson: richardson.clone(),
            raw_order: order(&central),
            order: order(&richardson),
            variation_fd: fd,
            rhs,
            residual: (fd + rhs).abs(),
        })
    }

    /// `W2` or `W3` with the grid-refinement error estimate.
    pub fn energy(&self, exec: &impl Executor) -> Result<Energy> {
        let what = if self.n() == 2 { Integrand::W2 } else { Integrand::W3 };
        let value = self.integrate(what, exec)?;
        let fine = self.with_grid(2 * self.grid.size)?.integrate(what, exec)?;
        Ok(Energy { integrand: what, value, refined: fine, quadrature_error: (fine - value).abs() })
    }
}

fn geometry_dvol(geo: &Geometry) -> f64 {
    libm::sqrt(det(&geo.jets.h.value()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Energy {
    pub integrand: Integrand,
    pub value: f64,
    /// The same integral on the grid with twice as many points per axis.
    pub refined: f64,
    pub quadrature_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variation {
    pub steps: Vec<f64>,
    /// Central differences per step.
    pub central: Vec<f64>,
    /// One Richardson step per adjacent pair of central differences.
    pub richardson: Vec<f64>,
    /// Observed order of the central differences, when three are available.
    pub raw_order: Option<f64>,
    /// Observed order after extrapolation, when three extrapolants are available.
    pub order: Option<f64>,
    pub variation_fd: f64,
    /// `6 ∫ u B₃ dvol`.
    pub rhs: f64,
    /// `|variation + rhs|`; the first variation of `W3` is `-6 ∫ u B₃`.
    pub residual: f64,
}

impl Variation {
    pub fn passes(&self, rel: f64) -> bool {
        self.residual < rel * (1.0 + self.rhs.abs())
    }
}

/// Classical fourth-order Runge-Kutta steps per geodesic.
pub const GEODESIC_STEPS: usize = 4;

/// `exp_y(t v)` for the ambient metric.
pub fn geodesic(metric: &MetricField, y: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    if metric.is_constant() {
        return Ok(y.iter().zip(v).map(|(a, b)| a + t * b).collect());
    }
    let d = y.len();
    let accel = |p: &[f64], w: &[f64]| -> Result<Vec<f64>> {
        let gm = christoffel_at(metric, p)?;
        Ok((0..d)
            .map(|a| {
                let mut acc = 0.0;
                for b in 0..d {
                    for c in 0..d {
                        acc -= gm.get(&[a, b, c]) * w[b] * w[c];
                    }
                }
                acc
            })
            .collect())
    };
    let h = t / GEODESIC_STEPS as f64;
    let mut p = y.to_vec();
    let mut w = v.to_vec();
    let step = |p: &[f64], k: &[f64], s: f64| -> Vec<f64> { p.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..GEODESIC_STEPS {
        let k1p = w.clone();
        let k1w = accel(&p, &w)?;
        let p2 = step(&p, &k1p, h / 2.0);
        let w2 = step(&w, &k1w, h / 2.0);
        let k2w = accel(&p2, &w2)?;
        let p3 = step(&p, &w2, h / 2.0);
        let w3 = step(&w, &k2w, h / 2.0);
        let k3w = accel(&p3, &w3)?;
        let p4 = step(&p, &w3, h);
        let w4 = step(&w, &k3w, h);
        let k4w = accel(&p4, &w4)?;
        for a in 0..d {
            p[a] += h / 6.0 * (k1p[a] + 2.0 * w2[a] + 2.0 * w3[a] + w4[a]);
            w[a] += h / 6.0 * (k1w[a] + 2.0 * k2w[a] + 2.0 * k3w[a] + k4w[a]);
        }
    }
    Ok(p)
}

/// One pointwise first-variation formula checked against finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationCheck {
    pub quantity: String,
    pub fd: Tensor,
    pub formula: Tensor,
    pub residual: f64,
}

/// Orders in the flow parameter kept when building `ι_t` as a jet.
const FLOW_ORDER: usize = 4;

/// Second-order data of `ι_t` at `x0`, as jets of order 2.
fn flowed(metric: &MetricField, emb: &Embedding, u: &Expr, x0: &[f64], t: f64) -> Result<SurfaceJets> {
    let k = 2 + FLOW_ORDER;
    let sj = SurfaceJets::new(metric, emb, x0, k)?;
    let uj = u.jet(x0, k - 1)?;
    let v: Vec<Jet> = sj.normal.iter().map(|nj| &nj.truncate(k - 1) * &uj).collect();
    let gamma = if sj.ambient.flat { None } else { Some(&sj.ambient.gamma) };
    let phi = exp_map(gamma, &sj.iota, &v, k)?;
    let n = x0.len();
    let iota_t: Vec<Jet> = phi.iter().map(|p| p.substitute(n, t).truncate(2)).collect();
    SurfaceJets::from_lift(metric, iota_t, emb.orientation(), x0, 2)
}

/// First variations of `h`, `L`, `H` and `dvol` along `ι_t = exp(t u N)` at `x0`,
/// from central differences with one Richardson step, against their formulas.
pub fn pointwise_variation(setup: &Setup, u: &Expr, x0: &[f64], step: f64) -> Result<Vec<VariationCheck>> {
    let n = setup.n();
    let nn = n as f64;
    let quantities = |t: f64| -> Result<[Tensor; 4]> {
        let sj = flowed(&setup.metric, &setup.embedding, u, x0, t)?;
        let h = sj.h.value();
        let vol = libm::sqrt(det(&h));
        Ok([h, sj.second.value(), Tensor::scalar(sj.mean_curvature().value()), Tensor::scalar(vol)])
    };
    let diff = |t: f64| -> Result<Vec<Tensor>> {
        let p = quantities(t)?;
        let m = quantities(-t)?;
        Ok(p.iter()
            .zip(m.iter())
            .map(|(a, b)| {
                let mut d = a.clone();
                d.axpy(-1.0, b);
                d.scale(1.0 / (2.0 * t))
            })
            .collect())
    };
    let d1 = diff(step)?;
    let d2 = diff(2.0 * step)?;
    let fd: Vec<Tensor> = d1
        .iter()
        .zip(&d2)
        .map(|(a, b)| {
            let mut r = a.scale(4.0 / 3.0);
            r.axpy(-1.0 / 3.0, b);
            r
        })
        .collect();

    let sj = SurfaceJets::new(&setup.metric, &setup.embedding, x0, 3)?;
    let uj = u.jet(x0, 2)?;
    let uval = uj.value();
    let du: Vec<f64> = (0..n)
        .map(|i| {
            let mut e = [0u8; 8];
            e[i] = 1;
            uj.derivative(&e[..n])
        })
        .collect();
    let gam = sj.gamma.value();
    let hess = Tensor::from_fn(n, 2, |x| {
        let mut e = [0u8; 8];
        e[x[0]] += 1;
        e[x[1]] += 1;
        let mut v = uj.derivative(&e[..n]);
        for k in 0..n {
            v -= gam.get(&[k, x[0], x[1]]) * du[k];
        }
        v
    });
    let h = sj.h.value();
    let hinv = sj.hinv.value();
    let l = sj.second.value();
    let l2 = l.matmul(&hinv).matmul(&l);
    let gbar = Tensor::from_fn(n, 2, |x| sj.riem_ad.get(&[0, x[0] + 1, x[1] + 1, 0]).value());
    let ric00 = sj.ric_ad.get(&[0, 0]).value();
    let mean = sj.mean_curvature().value();
    let vol = libm::sqrt(det(&h));

    let var_h = l.scale(2.0 * uval);
    let mut var_l = hess.scale(-1.0);
    var_l.axpy(uval, &l2);
    var_l.axpy(-uval, &gbar);
    let lap = hinv.dot(&hess);
    let l_norm2 = hinv.matmul(&l).matmul(&hinv).matmul(&l).trace();
    let var_mean = Tensor::scalar((-lap - uval * l_norm2 - uval * ric00) / nn);
    let var_vol = Tensor::scalar(nn * uval * mean * vol);

    let names = ["h", "L", "H", "dvol"];
    let formulas = [var_h, var_l, var_mean, var_vol];
    Ok(names
        .iter()
        .zip(fd)
        .zip(formulas)
        .map(|((name, fd), formula)| {
            let mut d = fd.clone();
            d.axpy(-1.0, &formula);
            let scale = fd.max_abs().max(formula.max_abs());
            VariationCheck { quantity: (*name).into(), residual: d.max_abs() / (1.0 + scale), fd, formula }
        })
        .collect())
}

/// `ΔH + 2H(H² - K)` for a surface in flat space; zero exactly on Willmore surfaces.
pub fn willmore_operator(geo: &Geometry) -> Result<f64> {
    if geo.n != 2 {
        return Err(Error::Scope("the Willmore operator is for surfaces".into()));
    }
    let s = &geo.surface;
    let h = s.mean;
    let gauss = s.scal / 2.0;
    Ok(s.lap_h + 2.0 * h * (h * h - gauss))
}
