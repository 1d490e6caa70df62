//! Scenario files and the built-in catalog.
//!
//! A scenario names an ambient metric, an embedding and the chart points to
//! evaluate at. Metrics and embeddings are either catalog names or component
//! expressions in `x1 .. xd`; numeric parameters in `params` can appear in
//! every expression.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use obstruction_core::ambient::MetricField;
use obstruction_core::expr::coords;
use obstruction_core::functional::{ClosedScenario, Grid};
use obstruction_core::hypersurface::Embedding;
use obstruction_core::{Expr, Setup};

use crate::error::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub ambient_dim: usize,
    pub metric: MetricSpec,
    pub embedding: EmbeddingSpec,
    pub points: Points,
    /// Ambient conformal factor `φ` for the covariance checks, `ĝ = e^{2φ} g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_factor: Option<String>,
    /// Variation direction `u` on closed scenarios, in `x1 .. xn`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation: Option<String>,
    #[serde(default)]
    pub tags: Vec<Tag>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MetricSpec {
    /// `euclidean` or `round_sphere` (stereographic chart, radius 1).
    Catalog { catalog: String },
    /// `e^{2φ}` times the Euclidean metric.
    Conformal { conformal: String },
    /// Upper triangle row by row, or all `d²` entries.
    Components { components: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum EmbeddingSpec {
    /// `plane`, `sphere` (param `rho`) or `cylinder` (param `a`).
    Catalog { catalog: String },
    /// `x_{n+1} = F(x1 .. xn)`.
    Graph { graph: String },
    Maps {
        maps: Vec<String>,
        #[serde(default = "default_orientation")]
        orientation: f64,
    },
}

fn default_orientation() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Points {
    List(Vec<Vec<f64>>),
    /// Quadrature grid of a closed scenario; pointwise commands use `sample`
    /// nodes spread over it.
    Grid {
        grid: usize,
        #[serde(default = "default_sample")]
        sample: usize,
    },
}

fn default_sample() -> usize {
    4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Flat,
    ConformallyFlat,
    Einstein,
    Closed,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::Flat, Tag::ConformallyFlat, Tag::Einstein, Tag::Closed];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Flat => "flat",
            Tag::ConformallyFlat => "conformally_flat",
            Tag::Einstein => "einstein",
            Tag::Closed => "closed",
        }
    }
}

/// Built-in scenario ids.
pub const CATALOG: [&str; 16] = [
    "plane_r4",
    "sphere_s3",
    "cylinder_s2xr",
    "graph_flat",
    "conf_flat",
    "s4_round",
    "perturbed",
    "torus_graph",
    "torus_graph_curved",
    "plane_r3",
    "sphere_s2",
    "cylinder_s1xr",
    "graph_flat_n2",
    "perturbed_n2",
    "conf_flat_n2",
    "torus_graph_n2",
];

const GRAPH3: &str = "0.3*x1^2 - 0.2*x2^2 + 0.25*x3^2 + 0.1*x1*x2 + 0.15*x1*x2*x3 + 0.05*x2^3";
const GRAPH2: &str = "0.3*x1^2 - 0.2*x2^2 + 0.1*x1*x2^2 + 0.05*x1^3";
const TORUS3: &str = "0.05*sin(x1)*sin(x2)*sin(x3) + 0.05*cos(x2) + 0.05*cos(x1 + x2)";
const TORUS2: &str = "0.1*sin(x1)*cos(x2) + 0.05*cos(x1 + x2)";

const PERTURBED3: [&str; 10] = [
    "1 + eps*(x1^2*x2 + 0.3*x3^4)",
    "eps*x1*x4^2",
    "eps*0.2*x2*x3",
    "eps*(x3^3 - x1)",
    "1 + eps*(x2^2*x4 + x1*x3)",
    "eps*0.5*x1^2*x2^2",
    "eps*x4",
    "1 + eps*x3*x4^2",
    "eps*x1*x2*x3",
    "1 + eps*(0.4*x1^4 + x2*x4)",
];

const PERTURBED2: [&str; 6] = [
    "1 + eps*(x1^2*x2 + 0.3*x3^3)",
    "eps*x1*x3^2",
    "eps*(x2*x3 - 0.5*x1)",
    "1 + eps*(x2^2*x3 + x1*x3)",
    "eps*0.4*x1^2*x2",
    "1 + eps*(x3*x1^2 + 0.2*x2^3)",
];

/// A 2π-periodic metric on the 4-torus with nonvanishing Weyl tensor.
const TORUS_METRIC: [&str; 10] = [
    "1 + 0.1*sin(x1)*cos(x4)",
    "0.05*sin(x2 + x4)",
    "0",
    "0",
    "1 + 0.1*cos(x3)",
    "0",
    "0.02*sin(x1)",
    "1",
    "0",
    "1 + 0.1*sin(x2)*sin(x4)",
];

const GRAPH3_POINTS: [[f64; 3]; 5] =
    [[0.1, 0.2, -0.1], [0.3, -0.2, 0.15], [-0.25, 0.1, 0.2], [0.05, -0.3, -0.2], [0.2, 0.25, 0.05]];
const GRAPH2_POINTS: [[f64; 2]; 5] = [[0.1, 0.2], [0.3, -0.2], [-0.25, 0.1], [0.05, -0.3], [0.2, 0.25]];
const ANGLE3_POINTS: [[f64; 3]; 5] =
    [[1.0, 0.9, 0.4], [0.7, 1.3, 2.0], [2.1, 0.6, -1.2], [1.4, 2.2, 3.0], [0.5, 1.7, 0.8]];
const ANGLE2_POINTS: [[f64; 2]; 5] = [[1.0, 0.9], [0.7, 2.0], [2.1, -1.2], [1.4, 3.0], [0.5, 0.8]];

fn list<const N: usize>(pts: &[[f64; N]]) -> Points {
    Points::List(pts.iter().map(|p| p.to_vec()).collect())
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Parameters given on the command line, as text.
pub type Overrides = BTreeMap<String, String>;

fn number(key: &str, v: &str) -> Result<f64, LabError> {
    v.trim().parse().map_err(|_| LabError::Input(format!("parameter {} = `{}` is not a number", key, v)))
}

struct Params<'a> {
    id: &'a str,
    given: &'a Overrides,
    allowed: Vec<&'static str>,
}

impl Params<'_> {
    fn num(&mut self, key: &'static str, default: f64) -> Result<f64, LabError> {
        self.allowed.push(key);
        self.given.get(key).map(|v| number(key, v)).unwrap_or(Ok(default))
    }

    fn text(&mut self, key: &'static str, default: &str) -> String {
        self.allowed.push(key);
        self.given.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn finish(self) -> Result<(), LabError> {
        for k in self.given.keys() {
            if !self.allowed.contains(&k.as_str()) {
                let known = if self.allowed.is_empty() { "none".to_string() } else { self.allowed.join(", ") };
                return Err(LabError::Input(format!(
                    "scenario {} has no parameter `{}` (parameters: {})",
                    self.id, k, known
                )));
            }
        }
        Ok(())
    }
}

fn base(id: &str, dim: usize, metric: MetricSpec, embedding: EmbeddingSpec, points: Points) -> Scenario {
    Scenario {
        id: id.into(),
        ambient_dim: dim,
        metric,
        embedding,
        points,
        conformal_factor: None,
        variation: None,
        tags: Vec::new(),
        params: BTreeMap::new(),
    }
}

fn euclidean() -> MetricSpec {
    MetricSpec::Catalog { catalog: "euclidean".into() }
}

const FLAT_TAGS: [Tag; 3] = [Tag::Flat, Tag::ConformallyFlat, Tag::Einstein];

/// Look up a built-in scenario and apply parameter overrides.
pub fn builtin(id: &str, given: &Overrides) -> Result<Scenario, LabError> {
    let mut p = Params { id, given, allowed: Vec::new() };
    let catalog = |c: &str| EmbeddingSpec::Catalog { catalog: c.into() };
    let graph = |f: String| EmbeddingSpec::Graph { graph: f };
    let s = match id {
        "plane_r4" | "plane_r3" => {
            let d = if id == "plane_r4" { 4 } else { 3 };
            let pts = if d == 4 { list(&GRAPH3_POINTS) } else { list(&GRAPH2_POINTS) };
            let mut s = base(id, d, euclidean(), catalog("plane"), pts);
            s.tags = FLAT_TAGS.to_vec();
            s
        }
        "sphere_s3" | "sphere_s2" => {
            let d = if id == "sphere_s3" { 4 } else { 3 };
            let pts = if d == 4 { list(&ANGLE3_POINTS) } else { list(&ANGLE2_POINTS) };
            let mut s = base(id, d, euclidean(), catalog("sphere"), pts);
            s.params.insert("rho".into(), p.num("rho", 1.0)?);
            s.tags = FLAT_TAGS.to_vec();
            s
        }
        "cylinder_s2xr" | "cylinder_s1xr" => {
            let d = if id == "cylinder_s2xr" { 4 } else { 3 };
            let pts = if d == 4 { list(&ANGLE3_POINTS) } else { list(&ANGLE2_POINTS) };
            let mut s = base(id, d, euclidean(), catalog("cylinder"), pts);
            s.params.insert("a".into(), p.num("a", 1.0)?);
            s.tags = FLAT_TAGS.to_vec();
            s
        }
        "graph_flat" | "graph_flat_n2" => {
            let (d, f, pts) =
                if id == "graph_flat" { (4, GRAPH3, list(&GRAPH3_POINTS)) } else { (3, GRAPH2, list(&GRAPH2_POINTS)) };
            let mut s = base(id, d, euclidean(), graph(p.text("f", f)), pts);
            s.tags = FLAT_TAGS.to_vec();
            s
        }
        "conf_flat" | "conf_flat_n2" => {
            let (d, f, phi, pts) = if id == "conf_flat" {
                (4, GRAPH3, "0.1*(x1 + x2*x3)", list(&GRAPH3_POINTS))
            } else {
                (3, GRAPH2, "0.1*(x1 + x2*x3)", list(&GRAPH2_POINTS))
            };
            let metric = MetricSpec::Conformal { conformal: p.text("phi", phi) };
            let mut s = base(id, d, metric, graph(p.text("f", f)), pts);
            s.tags = vec![Tag::ConformallyFlat];
            s
        }
        "s4_round" => {
            let metric = MetricSpec::Catalog { catalog: "round_sphere".into() };
            let mut s = base(id, 4, metric, graph(p.text("f", GRAPH3)), list(&GRAPH3_POINTS));
            s.tags = vec![Tag::ConformallyFlat, Tag::Einstein];
            s
        }
        "perturbed" | "perturbed_n2" => {
            let (d, comps, f, pts, phi) = if id == "perturbed" {
                (4, strings(&PERTURBED3), GRAPH3, list(&GRAPH3_POINTS), "0.1*(x1 + x2*x4)")
            } else {
                (3, strings(&PERTURBED2), GRAPH2, list(&GRAPH2_POINTS), "0.1*(x1 + x2*x3)")
            };
            let mut s = base(id, d, MetricSpec::Components { components: comps }, graph(p.text("f", f)), pts);
            s.params.insert("eps".into(), p.num("eps", 0.1)?);
            s.conformal_factor = Some(p.text("conformal", phi));
            s
        }
        "torus_graph" | "torus_graph_n2" | "torus_graph_curved" => {
            let (d, f, metric) = match id {
                "torus_graph" => (4, TORUS3, euclidean()),
                "torus_graph_n2" => (3, TORUS2, euclidean()),
                _ => (4, TORUS3, MetricSpec::Components { components: strings(&TORUS_METRIC) }),
            };
            let grid = if id == "torus_graph_curved" { 12 } else { 32 };
            let mut s = base(id, d, metric, graph(p.text("f", f)), Points::Grid { grid, sample: default_sample() });
            s.variation = Some(p.text("u", "cos(x1)"));
            s.tags = if id == "torus_graph_curved" { vec![Tag::Closed] } else { vec![Tag::Flat, Tag::ConformallyFlat, Tag::Einstein, Tag::Closed] };
            s
        }
        _ => {
            return Err(LabError::Input(format!(
                "unknown scenario `{}`; built-in scenarios: {}",
                id,
                CATALOG.join(", ")
            )))
        }
    };
    p.finish()?;
    Ok(s)
}

/// Resolve `arg` as a scenario file when it names an existing path or ends
/// in `.json`, as a built-in id otherwise. Numeric overrides on a file
/// replace entries of its `params`.
pub fn load(arg: &str, given: &Overrides) -> Result<Scenario, LabError> {
    let path = Path::new(arg);
    if !(arg.ends_with(".json") || path.is_file()) {
        return builtin(arg, given);
    }
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Input(format!("cannot read {}: {}", arg, e)))?;
    let mut s = from_json(&text)?;
    for (k, v) in given {
        if !s.params.contains_key(k) {
            return Err(LabError::Input(format!("scenario file {} has no parameter `{}`", arg, k)));
        }
        s.params.insert(k.clone(), number(k, v)?);
    }
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Scenario, LabError> {
    serde_json::from_str(text).map_err(|e| LabError::Input(format!("malformed scenario: {}", e)))
}

/// A scenario with its expressions parsed.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub setup: Setup,
    pub points: Vec<Vec<f64>>,
    pub conformal: Option<Expr>,
    /// Set for scenarios tagged `closed`.
    pub closed: Option<ClosedScenario>,
}

impl Resolved {
    pub fn n(&self) -> usize {
        self.scenario.ambient_dim - 1
    }

    pub fn has(&self, t: Tag) -> bool {
        self.scenario.tags.contains(&t)
    }
}

impl Scenario {
    fn param_list(&self) -> Vec<(&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }

    fn parse(&self, field: &str, src: &str, nvars: usize) -> Result<Expr, LabError> {
        LabError::expr(field, src, Expr::parse(src, coords(nvars), &self.param_list()))
    }

    /// Parse every expression and build the geometry. `grid` replaces the
    /// quadrature size of closed scenarios.
    pub fn resolve(&self, grid: Option<usize>) -> Result<Resolved, LabError> {
        let d = self.ambient_dim;
        if !(3..=4).contains(&d) {
            return Err(LabError::Input(format!("ambient_dim must be 3 or 4, got {}", d)));
        }
        let n = d - 1;
        let metric = self.metric(d)?;
        let embedding = self.embedding(n)?;
        let conformal = match &self.conformal_factor {
            Some(src) => Some(self.parse("conformal_factor", src, d)?),
            None => None,
        };
        let closed = if self.tags.contains(&Tag::Closed) {
            let height = match &self.embedding {
                EmbeddingSpec::Graph { graph } => self.parse("embedding.graph", graph, n)?,
                _ => return Err(LabError::Input("a closed scenario must be a graph over the torus".into())),
            };
            let u = self.parse("variation", self.variation.as_deref().unwrap_or("cos(x1)"), n)?;
            let size = match (grid, &self.points) {
                (Some(g), _) => g,
                (None, Points::Grid { grid, .. }) => *grid,
                (None, _) => 32,
            };
            Grid::new(n, size).map_err(LabError::from)?;
            Some(
                ClosedScenario::new(metric.clone(), height, u, size)
                    .map_err(|e| LabError::Scope(format!("tag closed does not hold: {}", e)))?,
            )
        } else {
            if self.variation.is_some() {
                return Err(LabError::Input("`variation` needs a closed scenario".into()));
            }
            None
        };
        let points = match &self.points {
            Points::List(v) => {
                for x in v {
                    if x.len() != n {
                        return Err(LabError::Input(format!("point {:?} has {} coordinates, need {}", x, x.len(), n)));
                    }
                }
                v.clone()
            }
            Points::Grid { grid, sample } => {
                let g = Grid::new(n, *grid).map_err(LabError::from)?;
                let stride = (g.len() / (*sample).max(1)).max(1);
                (0..*sample).map(|k| g.point((k * stride + stride / 3) % g.len())).collect()
            }
        };
        if points.is_empty() {
            return Err(LabError::Input("scenario has no points".into()));
        }
        Ok(Resolved { scenario: self.clone(), setup: Setup::new(metric, embedding), points, conformal, closed })
    }

    fn metric(&self, d: usize) -> Result<MetricField, LabError> {
        match &self.metric {
            MetricSpec::Catalog { catalog } => match catalog.as_str() {
                "euclidean" => Ok(MetricField::euclidean(d)),
                "round_sphere" => {
                    let src = match d {
                        3 => "log(2/(1 + x1^2 + x2^2 + x3^2))",
                        _ => "log(2/(1 + x1^2 + x2^2 + x3^2 + x4^2))",
                    };
                    Ok(MetricField::euclidean(d).conformal(&self.parse("metric", src, d)?))
                }
                other => Err(LabError::Input(format!("unknown metric catalog `{}` (euclidean, round_sphere)", other))),
            },
            MetricSpec::Conformal { conformal } => {
                Ok(MetricField::euclidean(d).conformal(&self.parse("metric.conformal", conformal, d)?))
            }
            MetricSpec::Components { components } => {
                let upper = d * (d + 1) / 2;
                let exprs: Vec<Expr> = components
                    .iter()
                    .enumerate()
                    .map(|(k, c)| self.parse(&format!("metric.components[{}]", k), c, d))
                    .collect::<Result<_, _>>()?;
                let full = if exprs.len() == upper {
                    let mut full = vec![Expr::konst(0.0); d * d];
                    let mut k = 0;
                    for i in 0..d {
                        for j in i..d {
                            full[i * d + j] = exprs[k].clone();
                            full[j * d + i] = exprs[k].clone();
                            k += 1;
                        }
                    }
                    full
                } else if exprs.len() == d * d {
                    exprs
                } else {
                    return Err(LabError::Input(format!(
                        "metric needs {} (upper triangle) or {} components, got {}",
                        upper,
                        d * d,
                        exprs.len()
                    )));
                };
                MetricField::new(d, full).map_err(LabError::from)
            }
        }
    }

    fn embedding(&self, n: usize) -> Result<Embedding, LabError> {
        let param = |k: &str| {
            self.params.get(k).copied().ok_or_else(|| LabError::Input(format!("embedding needs parameter `{}`", k)))
        };
        let maps = |srcs: &[String], orientation: f64| -> Result<Embedding, LabError> {
            if srcs.len() != n + 1 {
                return Err(LabError::Input(format!("embedding needs {} maps, got {}", n + 1, srcs.len())));
            }
            let exprs = srcs
                .iter()
                .enumerate()
                .map(|(k, s)| self.parse(&format!("embedding.maps[{}]", k), s, n))
                .collect::<Result<Vec<_>, _>>()?;
            Embedding::new(n, exprs, orientation).map_err(LabError::from)
        };
        match &self.embedding {
            EmbeddingSpec::Graph { graph } => Ok(Embedding::graph(n, self.parse("embedding.graph", graph, n)?)),
            EmbeddingSpec::Maps { maps: m, orientation } => maps(m, *orientation),
            EmbeddingSpec::Catalog { catalog } => match (catalog.as_str(), n) {
                ("plane", _) => Ok(Embedding::graph(n, Expr::konst(0.0))),
                ("sphere", 3) => {
                    param("rho")?;
                    maps(
                        &strings(&[
                            "rho*cos(x1)",
                            "rho*sin(x1)*cos(x2)",
                            "rho*sin(x1)*sin(x2)*cos(x3)",
                            "rho*sin(x1)*sin(x2)*sin(x3)",
                        ]),
                        -1.0,
                    )
                }
                ("sphere", 2) => {
                    param("rho")?;
                    maps(&strings(&["rho*sin(x1)*cos(x2)", "rho*sin(x1)*sin(x2)", "rho*cos(x1)"]), 1.0)
                }
                ("cylinder", 3) => {
                    param("a")?;
                    maps(&strings(&["a*sin(x1)*cos(x2)", "a*sin(x1)*sin(x2)", "a*cos(x1)", "x3"]), -1.0)
                }
                ("cylinder", 2) => {
                    param("a")?;
                    maps(&strings(&["a*cos(x1)", "a*sin(x1)", "x2"]), 1.0)
                }
                (other, _) => Err(LabError::Input(format!("unknown embedding catalog `{}` (plane, sphere, cylinder)", other))),
            },
        }
    }
}
