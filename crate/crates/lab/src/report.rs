//! JSON report types.
//!
//! Every real number goes through [`Real`], which writes 17 significant
//! digits so a report parses back to the same doubles. Non-finite values
//! are written as `null`.

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use obstruction_core::Tensor;

#[derive(Clone, Copy, Debug, Default)]
pub struct Real(pub f64);

impl PartialEq for Real {
    fn eq(&self, o: &Real) -> bool {
        self.0.to_bits() == o.0.to_bits() || (self.0.is_nan() && o.0.is_nan())
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Real {
        Real(v)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Real, D::Error> {
        Ok(Real(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN)))
    }
}

pub fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

/// Components in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorOut {
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<Real>,
}

impl From<&Tensor> for TensorOut {
    fn from(t: &Tensor) -> TensorOut {
        TensorOut { dim: t.dim(), rank: t.rank(), data: reals(t.data()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Named {
    pub name: String,
    pub value: Real,
}

impl Named {
    pub fn new(name: &str, value: f64) -> Named {
        Named { name: name.into(), value: Real(value) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceOut {
    pub abs: Real,
    pub rel: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassOut {
    pub flat: bool,
    pub conformally_flat: bool,
    pub einstein: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientOut {
    /// Ambient point `ι(x)`.
    pub y: Vec<Real>,
    pub scal: Real,
    pub jbar: Real,
    pub weyl_norm: Real,
    pub ric00: Real,
    pub p00: Real,
    /// `R̄_{0ij0}` in the orthonormal tangent frame.
    pub g_normal: TensorOut,
    /// `W̄_{0ij0}`.
    pub w_normal: TensorOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceOut {
    pub mean: Real,
    pub l: TensorOut,
    pub lo: TensorOut,
    pub lo_norm2: Real,
    pub tr_lo3: Real,
    pub tr_lo4: Real,
    pub scal: Real,
    pub j: Real,
    pub lap_h: Real,
    pub divdiv_lo: Real,
    pub kappa1: Real,
    pub kappa2: Real,
    /// `(ů, 𝒲)`.
    pub lo_w: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StacksPoint {
    pub point: Vec<Real>,
    pub ambient: AmbientOut,
    pub surface: SurfaceOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StacksReport {
    pub scenario_id: String,
    pub n: usize,
    pub jet_order: usize,
    pub points: Vec<StacksPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartOut {
    pub name: String,
    pub chart: Real,
    pub formula: Real,
    pub residual: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesOut {
    /// Obstruction from the recursive solve.
    pub recursive: Real,
    /// Obstruction with the closed coefficient formulas.
    pub parametric: Real,
    /// Largest coefficient of `S - 1` below `r^{n+1}`.
    pub low_recursive: Real,
    pub low_parametric: Real,
    pub sigma: Vec<Real>,
    pub sigma_parametric: Vec<Real>,
    pub volume: Vec<Real>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueOut {
    pub residue: Real,
    pub b2: Real,
    /// `|residue + 3 B₂ / 8| / (1 + |B₂|)`.
    pub residual: Real,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPoint {
    pub point: Vec<Real>,
    pub h1: TensorOut,
    pub h2: TensorOut,
    pub h3: TensorOut,
    pub tr_h4: Option<Real>,
    pub v_trace: Vec<Real>,
    pub v_closed: Vec<Real>,
    pub v_flat: Vec<Real>,
    pub sigma: Vec<Real>,
    pub sigma_flat: Vec<Real>,
    /// Present when `σ_(4)` has a pole.
    pub residue: Option<ResidueOut>,
    pub series: Option<SeriesOut>,
    pub chart_checks: Vec<ChartOut>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub scenario_id: String,
    pub n: usize,
    pub jet_order: usize,
    pub tolerance: Real,
    pub points: Vec<ExpansionPoint>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaValue {
    pub id: String,
    pub value: Real,
    /// Largest term in the sum; the rounding error is relative to it.
    pub scale: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarOut {
    pub invariant: Real,
    pub expanded: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalOut {
    pub quantity: String,
    pub factor: String,
    pub weight: Real,
    pub original: Real,
    pub rescaled: Real,
    pub residual: Real,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionPoint {
    pub point: Vec<Real>,
    pub class: ClassOut,
    pub values: Vec<FormulaValue>,
    pub skipped: Vec<Skip>,
    /// Ids of the rows and columns of `residual_matrix`.
    pub ids: Vec<String>,
    pub residual_matrix: Vec<Vec<Real>>,
    /// Largest `|B_i - B_j|`, leaving out the published GGHW form.
    pub max_residual: Real,
    /// Worst pair in units of the tolerance; at most 1 passes.
    pub worst_ratio: Real,
    pub bach: Option<TensorOut>,
    pub lop: Vec<Named>,
    pub star: Option<StarOut>,
    pub conformal_checks: Vec<ConformalOut>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub scenario_id: String,
    pub n: usize,
    pub jet_order: usize,
    pub tolerance: ToleranceOut,
    pub points: Vec<ObstructionPoint>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub identity_id: String,
    pub scenario_id: String,
    pub point: Vec<Real>,
    pub raw_residual: Real,
    pub normalized_residual: Real,
    pub status: String,
    /// Normalized residual of the alternative sign convention, if recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_residual: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub scenario_id: String,
    pub tolerance: Real,
    pub rows: Vec<IdentityRow>,
    pub summary: Summary,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationOut {
    pub steps: Vec<Real>,
    pub central: Vec<Real>,
    pub richardson: Vec<Real>,
    pub raw_order: Option<Real>,
    pub order: Option<Real>,
    pub variation_fd: Real,
    /// `6 ∫ u B₃ dvol`.
    pub rhs: Real,
    /// `|variation_fd + rhs|`.
    pub residual: Real,
    pub tolerance: Real,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub scenario_id: String,
    pub n: usize,
    pub grid: usize,
    pub volume: Real,
    #[serde(rename = "W2")]
    pub w2: Option<Real>,
    #[serde(rename = "W3")]
    pub w3: Option<Real>,
    /// Same integral on the grid with twice the points per axis.
    pub refined: Real,
    pub quadrature_error: Real,
    pub variation: Option<VariationOut>,
    pub divergence_grid: usize,
    /// Integrals of total divergences; each should vanish.
    pub total_divergences: Vec<Named>,
    pub divergence_tolerance: Real,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagCheck {
    pub tag: String,
    pub declared: bool,
    pub holds: bool,
    /// Largest curvature component the tag says vanishes, over the points.
    pub residual: Option<Real>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLine {
    pub operator: String,
    pub order: usize,
    /// Orders fixed internally do not depend on `--jet-order`.
    pub internal: bool,
    pub commands: Vec<String>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub scenario_id: String,
    pub n: usize,
    pub points: usize,
    pub jet_order: usize,
    pub tags: Vec<TagCheck>,
    pub budget: Vec<BudgetLine>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllReport {
    pub validate: ValidateReport,
    pub stacks: StacksReport,
    pub expansion: ExpansionReport,
    pub obstruction: ObstructionReport,
    pub identities: IdentityReport,
    pub functional: Option<FunctionalReport>,
    pub passed: bool,
}

/// Any report the driver can write.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum Report {
    Validate(ValidateReport),
    Stacks(StacksReport),
    Expansion(ExpansionReport),
    Obstruction(ObstructionReport),
    Identities(IdentityReport),
    Functional(FunctionalReport),
    All(Box<AllReport>),
}

impl Report {
    pub fn passed(&self) -> bool {
        match self {
            Report::Validate(r) => r.passed,
            Report::Stacks(_) => true,
            Report::Expansion(r) => r.passed,
            Report::Obstruction(r) => r.passed,
            Report::Identities(r) => r.passed,
            Report::Functional(r) => r.passed,
            Report::All(r) => r.passed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Report> {
        serde_json::from_str(s)
    }
}
