//! Commands: evaluate a resolved scenario and build its report.

use std::fmt::Write as _;

use obstruction_core::expansion::{chart_checks, Expansion, Remainder, SERIES_TOL};
use obstruction_core::functional::{ClosedScenario, Executor, Integrand};
use obstruction_core::identities::{run_all, Status};
use obstruction_core::jets::MAX_ORDER;
use obstruction_core::obstruction::{
    b2_bianchi, conformal_checks, FormulaId, ObstructionReport as CoreReport, Point, Tolerance, MIN_ORDER,
};
use obstruction_core::Geometry;

use crate::error::LabError;
use crate::report::*;
use crate::scenario::{EmbeddingSpec, Resolved, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Stacks,
    Expansion,
    Obstruction,
    Identities,
    Variation,
    All,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Validate,
        Command::Stacks,
        Command::Expansion,
        Command::Obstruction,
        Command::Identities,
        Command::Variation,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Stacks => "stacks",
            Command::Expansion => "expansion",
            Command::Obstruction => "obstruction",
            Command::Identities => "identities",
            Command::Variation => "variation",
            Command::All => "all",
        }
    }

    /// Smallest `--jet-order` the command accepts.
    pub fn min_order(self) -> usize {
        match self {
            Command::Validate | Command::Variation => 0,
            Command::Stacks => STACK_ORDER,
            _ => MIN_ORDER,
        }
    }
}

/// Order of the base-point jets needed for the surface stack.
pub const STACK_ORDER: usize = 4;
/// Tags hold when the curvature they say vanishes is below this.
pub const TAG_TOL: f64 = 1e-10;
/// Tolerances for conformal covariance of LOP, `⋆` and the Bach tensor.
pub const COVARIANCE_TOL: f64 = 1e-8;
/// Residue law tolerance, relative to `1 + |B₂|`.
pub const RESIDUE_TOL: f64 = 1e-8;
/// Finite-difference variation tolerance, relative to `1 + |rhs|`.
pub const VARIATION_TOL: f64 = 1e-4;
/// Smallest extrapolated convergence order accepted for the variation.
pub const MIN_VARIATION_ORDER: f64 = 3.5;
/// Total-divergence integrals must vanish to this.
pub const DIVERGENCE_TOL: f64 = 1e-8;
/// Total-divergence integrands need fourth-order jets per node, so they use
/// a coarser grid than the energy.
pub const DIVERGENCE_GRID: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub jet_order: usize,
    pub tol: Tolerance,
    /// Empty means every formula for the dimension.
    pub formulas: Vec<FormulaId>,
    /// Overrides the quadrature grid of closed scenarios.
    pub grid: Option<usize>,
    /// Half-widths of the central differences, each twice the previous.
    pub t_steps: Vec<f64>,
    /// Also solve the Yamabe equation in normal coordinates.
    pub oracle: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> RunConfig {
        RunConfig {
            command,
            jet_order: 6,
            tol: Tolerance::default(),
            formulas: Vec::new(),
            grid: None,
            t_steps: vec![1e-3, 2e-3, 4e-3, 8e-3],
            oracle: true,
        }
    }

    pub fn check(&self) -> Result<(), LabError> {
        let min = self.command.min_order();
        if self.jet_order < min {
            return Err(LabError::Input(format!(
                "{} needs --jet-order at least {}, got {}",
                self.command.name(),
                min,
                self.jet_order
            )));
        }
        if self.jet_order > MAX_ORDER {
            return Err(LabError::Input(format!("--jet-order is at most {}, got {}", MAX_ORDER, self.jet_order)));
        }
        if !(self.tol.rel >= 0.0 && self.tol.abs >= 0.0) {
            return Err(LabError::Input("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

fn pt(x: &[f64]) -> Vec<Real> {
    reals(x)
}

fn map_points<E: Executor + Sync, T: Send>(
    res: &Resolved,
    exec: &E,
    f: impl Fn(&[f64]) -> obstruction_core::Result<T> + Sync + Send,
) -> Result<Vec<T>, LabError> {
    exec.map(res.points.len(), |k| f(&res.points[k])).map_err(LabError::from)
}

/// Evaluate `cfg.command` on `res`.
pub fn run<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<Report, LabError> {
    cfg.check()?;
    if !cfg.formulas.is_empty() && !matches!(cfg.command, Command::Obstruction | Command::All) {
        return Err(LabError::Input("--formulas applies to obstruction and all".into()));
    }
    let validation = validate(cfg, res, exec)?;
    if cfg.command == Command::Validate {
        return Ok(Report::Validate(validation));
    }
    require_tags(&validation)?;
    Ok(match cfg.command {
        Command::Validate => unreachable!(),
        Command::Stacks => Report::Stacks(stacks(cfg, res, exec)?),
        Command::Expansion => Report::Expansion(expansion(cfg, res, exec)?),
        Command::Obstruction => Report::Obstruction(obstruction(cfg, res, exec)?),
        Command::Identities => Report::Identities(identities(cfg, res, exec)?),
        Command::Variation => Report::Functional(functional(cfg, res, exec)?),
        Command::All => {
            let stacks = stacks(cfg, res, exec)?;
            let expansion = expansion(cfg, res, exec)?;
            let obstruction = obstruction(cfg, res, exec)?;
            let identities = identities(cfg, res, exec)?;
            let functional = if res.closed.is_some() { Some(functional(cfg, res, exec)?) } else { None };
            let passed = expansion.passed
                && obstruction.passed
                && identities.passed
                && functional.as_ref().is_none_or(|f| f.passed);
            Report::All(Box::new(AllReport { validate: validation, stacks, expansion, obstruction, identities, functional, passed }))
        }
    })
}

/// Exit code of a finished run: 0 when every check passed, 1 for failed
/// numerical checks, 3 for tags that do not hold.
pub fn exit_code(r: &Report) -> i32 {
    match r {
        Report::Validate(v) if !v.passed => 3,
        _ if r.passed() => 0,
        _ => 1,
    }
}

fn require_tags(v: &ValidateReport) -> Result<(), LabError> {
    for t in &v.tags {
        if t.declared && !t.holds {
            return Err(LabError::Scope(format!(
                "scenario {} is tagged {} but the tag does not hold (residual {})",
                v.scenario_id,
                t.tag,
                t.residual.map_or("n/a".to_string(), |r| format!("{:.3e}", r.0))
            )));
        }
    }
    Ok(())
}

struct Curvature {
    flat: f64,
    conformally_flat: f64,
    einstein: f64,
}

fn curvature(geo: &Geometry) -> Curvature {
    let a = &geo.ambient;
    let cf = if a.dim > 3 { a.weyl.max_abs() } else { a.cotton().max_abs() };
    let mut e = a.ric.clone();
    e.axpy(-a.scal / a.dim as f64, &obstruction_core::Tensor::identity(a.dim));
    Curvature { flat: a.riem.max_abs(), conformally_flat: cf, einstein: e.max_abs() }
}

/// Tag verification and the jet-order budget.
pub fn validate<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<ValidateReport, LabError> {
    let curv = map_points(res, exec, |x| Ok(curvature(&res.setup.at(x, STACK_ORDER)?)))?;
    let worst = |f: fn(&Curvature) -> f64| curv.iter().map(f).fold(0.0, f64::max);
    let mut tags = Vec::new();
    for t in Tag::ALL {
        let declared = res.has(t);
        let (holds, residual) = match t {
            Tag::Flat => {
                let r = worst(|c| c.flat);
                (r < TAG_TOL, Some(Real(r)))
            }
            Tag::ConformallyFlat => {
                let r = worst(|c| c.conformally_flat);
                (r < TAG_TOL, Some(Real(r)))
            }
            Tag::Einstein => {
                let r = worst(|c| c.einstein);
                (r < TAG_TOL, Some(Real(r)))
            }
            Tag::Closed => (res.closed.is_some() || periodic_graph(res), None),
        };
        tags.push(TagCheck { tag: t.name().into(), declared, holds, residual });
    }
    let passed = tags.iter().all(|t| !t.declared || t.holds);
    Ok(ValidateReport {
        scenario_id: res.scenario.id.clone(),
        n: res.n(),
        points: res.points.len(),
        jet_order: cfg.jet_order,
        tags,
        budget: budget(res.n(), cfg.jet_order),
        passed,
    })
}

fn periodic_graph(res: &Resolved) -> bool {
    let EmbeddingSpec::Graph { .. } = &res.scenario.embedding else { return false };
    let n = res.n();
    let height = res.setup.embedding.maps()[n].clone();
    ClosedScenario::new(res.setup.metric.clone(), height, obstruction_core::Expr::konst(0.0), 4).is_ok()
}

/// Which operators need which jet order at the base point.
pub fn budget(n: usize, jet_order: usize) -> Vec<BudgetLine> {
    let line = |op: &str, order: usize, internal: bool, cmds: &[&str]| BudgetLine {
        operator: op.into(),
        order,
        internal,
        commands: cmds.iter().map(|s| s.to_string()).collect(),
        satisfied: internal || jet_order >= order,
    };
    vec![
        line("ambient curvature R̄, W̄, P̄", 2, false, &["stacks", "expansion", "obstruction", "identities"]),
        line("second fundamental form L, H, ů", 2, false, &["stacks", "expansion", "obstruction", "identities"]),
        line("covariant derivatives of L and W̄₀ up to Hess, Δ, δδ", STACK_ORDER, false, &["stacks", "expansion"]),
        line("fourth volume coefficient, J̄'', δδ of the Fialkov tensor", MIN_ORDER, false, &["expansion", "obstruction"]),
        line("B₂ and B₃ closed formulas", MIN_ORDER, false, &["obstruction", "all"]),
        line("identity catalogue (δ of ∇̄₀Ric̄₀, ΔJ)", MIN_ORDER, false, &["identities", "all"]),
        line("Yamabe solve in normal coordinates", n + 2, true, &["expansion", "obstruction"]),
        line("flowed embedding jets for pointwise variations", 6, true, &["variation"]),
        line("B₃ per quadrature node", MIN_ORDER, true, &["variation"]),
        line("total-divergence integrands per node", STACK_ORDER, true, &["variation"]),
    ]
}

pub fn stacks<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<StacksReport, LabError> {
    let points = map_points(res, exec, |x| {
        let g = res.setup.at(x, cfg.jet_order)?;
        let a = &g.ambient;
        let s = &g.surface;
        Ok(StacksPoint {
            point: pt(x),
            ambient: AmbientOut {
                y: reals(&g.jets.y0),
                scal: Real(a.scal),
                jbar: Real(a.jbar),
                weyl_norm: Real(a.weyl.norm2().sqrt()),
                ric00: Real(a.ric00()),
                p00: Real(a.p00()),
                g_normal: (&a.g_normal()).into(),
                w_normal: (&a.w_normal()).into(),
            },
            surface: SurfaceOut {
                mean: Real(s.mean),
                l: (&s.l).into(),
                lo: (&s.lo).into(),
                lo_norm2: Real(s.lo_norm2),
                tr_lo3: Real(s.tr_lo3),
                tr_lo4: Real(s.tr_lo4),
                scal: Real(s.scal),
                j: Real(s.j),
                lap_h: Real(s.lap_h),
                divdiv_lo: Real(s.divdiv_lo),
                kappa1: Real(s.kappa1),
                kappa2: Real(s.kappa2),
                lo_w: Real(s.lo.dot(&s.what)),
            },
        })
    })?;
    Ok(StacksReport { scenario_id: res.scenario.id.clone(), n: res.n(), jet_order: cfg.jet_order, points })
}

pub fn expansion<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<ExpansionReport, LabError> {
    let n = res.n();
    let points = map_points(res, exec, |x| {
        let geo = res.setup.at(x, cfg.jet_order)?;
        let exp = Expansion::new(&geo)?;
        let residue = if n == 2 {
            let b2 = b2_bianchi(&geo).value;
            let residual = (exp.residue + 0.375 * b2).abs() / (1.0 + b2.abs());
            Some(ResidueOut { residue: Real(exp.residue), b2: Real(b2), residual: Real(residual), passed: residual < RESIDUE_TOL })
        } else {
            None
        };
        let (series, checks) = if cfg.oracle {
            let r = Remainder::new(&res.setup.metric, &res.setup.embedding, x)?;
            let checks: Vec<ChartOut> = chart_checks(&r.chart, &geo, &exp)?
                .iter()
                .map(|c| ChartOut {
                    name: c.name.into(),
                    chart: Real(c.chart),
                    formula: Real(c.formula),
                    residual: Real(c.residual()),
                })
                .collect();
            let s = SeriesOut {
                recursive: Real(r.recursive),
                parametric: Real(r.parametric),
                low_recursive: Real(r.low_recursive),
                low_parametric: Real(r.low_parametric),
                sigma: reals(&r.sigma),
                sigma_parametric: reals(&r.sigma_parametric),
                volume: reals(&r.volume),
                passed: r.low_recursive <= SERIES_TOL && r.low_parametric <= SERIES_TOL,
            };
            (Some(s), checks)
        } else {
            (None, Vec::new())
        };
        let passed = residue.as_ref().is_none_or(|r| r.passed)
            && series.as_ref().is_none_or(|s| s.passed)
            && checks.iter().all(|c| c.residual.0 <= SERIES_TOL);
        Ok(ExpansionPoint {
            point: pt(x),
            h1: (&exp.h1).into(),
            h2: (&exp.h2).into(),
            h3: (&exp.h3).into(),
            tr_h4: exp.tr_h4.map(Real),
            v_trace: reals(&exp.v_trace),
            v_closed: reals(&exp.v_closed),
            v_flat: reals(&exp.v_flat),
            sigma: reals(&exp.sigma),
            sigma_flat: reals(&exp.sigma_flat),
            residue,
            series,
            chart_checks: checks,
            passed,
        })
    })?;
    let passed = points.iter().all(|p| p.passed);
    Ok(ExpansionReport {
        scenario_id: res.scenario.id.clone(),
        n,
        jet_order: cfg.jet_order,
        tolerance: Real(SERIES_TOL),
        points,
        passed,
    })
}

pub fn obstruction<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<ObstructionReport, LabError> {
    for id in &cfg.formulas {
        if id.dim() != res.n() {
            return Err(LabError::Scope(format!("{} is for n = {}, scenario has n = {}", id, id.dim(), res.n())));
        }
    }
    let points = map_points(res, exec, |x| {
        let p = Point::new(&res.setup, x, cfg.jet_order, cfg.oracle)?;
        let r = CoreReport::build(&p, &cfg.formulas)?;
        let conf = match &res.conformal {
            Some(phi) => conformal_checks(&res.setup, x, phi, cfg.jet_order)?,
            None => Vec::new(),
        };
        Ok(point_report(x, &p, &r, &conf, &cfg.tol))
    })?;
    let passed = points.iter().all(|p| p.passed);
    Ok(ObstructionReport {
        scenario_id: res.scenario.id.clone(),
        n: res.n(),
        jet_order: cfg.jet_order,
        tolerance: ToleranceOut { abs: Real(cfg.tol.abs), rel: Real(cfg.tol.rel) },
        points,
        passed,
    })
}

fn point_report(
    x: &[f64],
    p: &Point,
    r: &CoreReport,
    conf: &[obstruction_core::obstruction::ConformalCheck],
    tol: &Tolerance,
) -> ObstructionPoint {
    let mut max_residual = 0.0f64;
    for (i, (a, _)) in r.values.iter().enumerate() {
        for (j, (b, _)) in r.values.iter().enumerate() {
            if !a.is_disputed() && !b.is_disputed() {
                max_residual = max_residual.max(r.residual_matrix[i][j]);
            }
        }
    }
    let worst = r.worst_ratio(tol);
    let conformal: Vec<ConformalOut> = conf
        .iter()
        .map(|c| {
            let limit = if c.quantity.starts_with('b') && c.quantity != "bach" { tol.rel } else { COVARIANCE_TOL };
            ConformalOut {
                quantity: c.quantity.into(),
                factor: c.factor.clone(),
                weight: Real(c.weight),
                original: Real(c.original),
                rescaled: Real(c.rescaled),
                residual: Real(c.residual),
                passed: c.residual <= limit,
            }
        })
        .collect();
    ObstructionPoint {
        point: pt(x),
        class: ClassOut { flat: p.class.flat, conformally_flat: p.class.conformally_flat, einstein: p.class.einstein },
        values: r
            .values
            .iter()
            .map(|(id, v)| FormulaValue { id: id.name().into(), value: Real(v.value), scale: Real(v.scale) })
            .collect(),
        skipped: r.skipped.iter().map(|(id, why)| Skip { id: id.name().into(), reason: why.clone() }).collect(),
        ids: r.values.iter().map(|(id, _)| id.name().to_string()).collect(),
        residual_matrix: r.residual_matrix.iter().map(|row| reals(row)).collect(),
        max_residual: Real(max_residual),
        worst_ratio: Real(worst),
        bach: r.bach.as_ref().map(TensorOut::from),
        lop: r.lop_values.iter().map(|(k, v)| Named::new(k, *v)).collect(),
        star: r.star.as_ref().map(|s| StarOut { invariant: Real(s.invariant.value), expanded: Real(s.expanded.value) }),
        passed: worst <= 1.0 && conformal.iter().all(|c| c.passed),
        conformal_checks: conformal,
    }
}

pub fn identities<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<IdentityReport, LabError> {
    let id = res.scenario.id.clone();
    let per_point = map_points(res, exec, |x| {
        let geo = res.setup.at(x, cfg.jet_order)?;
        Ok(run_all(&geo, cfg.tol.rel)
            .into_iter()
            .map(|o| IdentityRow {
                identity_id: o.id.into(),
                scenario_id: id.clone(),
                point: pt(x),
                raw_residual: Real(o.balance.raw),
                normalized_residual: Real(o.balance.normalized()),
                status: o.status.name().into(),
                variant_residual: o.variant.map(|v| Real(v.normalized())),
                note: o.note,
            })
            .collect::<Vec<_>>())
    })?;
    let rows: Vec<IdentityRow> = per_point.into_iter().flatten().collect();
    let mut summary = Summary::default();
    for r in &rows {
        match r.status.as_str() {
            s if s == Status::Pass.name() => summary.pass += 1,
            s if s == Status::Vacuous.name() => summary.vacuous += 1,
            s if s == Status::Skipped.name() => summary.skipped += 1,
            _ => summary.fail += 1,
        }
    }
    Ok(IdentityReport { scenario_id: id, tolerance: Real(cfg.tol.rel), passed: summary.fail == 0, rows, summary })
}

pub fn functional<E: Executor + Sync>(cfg: &RunConfig, res: &Resolved, exec: &E) -> Result<FunctionalReport, LabError> {
    let sc = res
        .closed
        .as_ref()
        .ok_or_else(|| LabError::Scope(format!("variation needs a closed scenario; {} is not tagged closed", res.scenario.id)))?;
    let n = sc.n();
    let energy = sc.energy(exec)?;
    let volume = sc.integrate(Integrand::Volume, exec)?;
    let variation = if n == 3 {
        let v = sc.normal_variation(&cfg.t_steps, exec)?;
        let order_ok = v.order.is_none_or(|o| o >= MIN_VARIATION_ORDER);
        Some(VariationOut {
            steps: reals(&v.steps),
            central: reals(&v.central),
            richardson: reals(&v.richardson),
            raw_order: v.raw_order.map(Real),
            order: v.order.map(Real),
            variation_fd: Real(v.variation_fd),
            rhs: Real(v.rhs),
            residual: Real(v.residual),
            tolerance: Real(VARIATION_TOL),
            passed: v.passes(VARIATION_TOL) && order_ok,
        })
    } else {
        None
    };
    let dgrid = sc.grid.size.min(DIVERGENCE_GRID);
    let coarse = sc.with_grid(dgrid)?;
    let mut divs = vec![Named::new(Integrand::DiffKey.name(), coarse.integrate(Integrand::DiffKey, exec)?)];
    if n == 3 {
        divs.push(Named::new(
            Integrand::WeylDivergence.name(),
            coarse.integrate(Integrand::WeylDivergence, exec)?,
        ));
    }
    let passed = variation.as_ref().is_none_or(|v| v.passed) && divs.iter().all(|d| d.value.0.abs() <= DIVERGENCE_TOL);
    let (w2, w3) = if n == 2 { (Some(Real(energy.value)), None) } else { (None, Some(Real(energy.value))) };
    Ok(FunctionalReport {
        scenario_id: res.scenario.id.clone(),
        n,
        grid: sc.grid.size,
        volume: Real(volume),
        w2,
        w3,
        refined: Real(energy.refined),
        quadrature_error: Real(energy.quadrature_error),
        variation,
        divergence_grid: dgrid,
        total_divergences: divs,
        divergence_tolerance: Real(DIVERGENCE_TOL),
        passed,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

/// Human-readable summary of a report.
pub fn table(r: &Report) -> String {
    let mut s = String::new();
    match r {
        Report::Validate(v) => validate_table(&mut s, v),
        Report::Stacks(v) => stacks_table(&mut s, v),
        Report::Expansion(v) => expansion_table(&mut s, v),
        Report::Obstruction(v) => obstruction_table(&mut s, v),
        Report::Identities(v) => identity_table(&mut s, v),
        Report::Functional(v) => functional_table(&mut s, v),
        Report::All(a) => {
            validate_table(&mut s, &a.validate);
            stacks_table(&mut s, &a.stacks);
            expansion_table(&mut s, &a.expansion);
            obstruction_table(&mut s, &a.obstruction);
            identity_table(&mut s, &a.identities);
            if let Some(f) = &a.functional {
                functional_table(&mut s, f);
            }
            let _ = writeln!(s, "overall: {}", mark(a.passed));
        }
    }
    s
}

fn fmt_point(p: &[Real]) -> String {
    let v: Vec<String> = p.iter().map(|x| format!("{:.4}", x.0)).collect();
    format!("({})", v.join(", "))
}

fn validate_table(s: &mut String, v: &ValidateReport) {
    let _ = writeln!(s, "scenario {} (n = {}, {} points, jet order {})", v.scenario_id, v.n, v.points, v.jet_order);
    for t in &v.tags {
        let res = t.residual.map_or(String::new(), |r| format!("  residual {:.2e}", r.0));
        let state = match (t.declared, t.holds) {
            (true, true) => "declared, verified",
            (true, false) => "declared, FAILS",
            (false, true) => "holds",
            (false, false) => "does not hold",
        };
        let _ = writeln!(s, "  tag {:17} {}{}", t.tag, state, res);
    }
    let _ = writeln!(s, "  jet-order budget:");
    for b in &v.budget {
        let kind = if b.internal { "internal" } else { mark(b.satisfied) };
        let _ = writeln!(s, "    {:>2}  {:9} {}  [{}]", b.order, kind, b.operator, b.commands.join(", "));
    }
}

fn stacks_table(s: &mut String, v: &StacksReport) {
    let _ = writeln!(s, "stacks {} (n = {})", v.scenario_id, v.n);
    let _ = writeln!(s, "  {:28} {:>14} {:>14} {:>14} {:>14} {:>14}", "point", "H", "|ů|²", "tr ů³", "(ů,𝒲)", "|W̄|");
    for p in &v.points {
        let _ = writeln!(
            s,
            "  {:28} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            fmt_point(&p.point),
            p.surface.mean.0,
            p.surface.lo_norm2.0,
            p.surface.tr_lo3.0,
            p.surface.lo_w.0,
            p.ambient.weyl_norm.0
        );
    }
}

fn expansion_table(s: &mut String, v: &ExpansionReport) {
    let _ = writeln!(s, "expansion {} (n = {})", v.scenario_id, v.n);
    for p in &v.points {
        let sig: Vec<String> = p.sigma.iter().map(|x| format!("{:.6e}", x.0)).collect();
        let _ = write!(s, "  {:28} σ = [{}]", fmt_point(&p.point), sig.join(", "));
        if let Some(r) = &p.residue {
            let _ = write!(s, "  residue {:.6e} vs -3B₂/8 {:.6e} {}", r.residue.0, -0.375 * r.b2.0, mark(r.passed));
        }
        if let Some(se) = &p.series {
            let worst = p.chart_checks.iter().map(|c| c.residual.0).fold(0.0, f64::max);
            let _ = write!(
                s,
                "  S-1 low orders {:.1e} / {:.1e}, chart {:.1e} {}",
                se.low_recursive.0,
                se.low_parametric.0,
                worst,
                mark(p.passed)
            );
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "  {}", mark(v.passed));
}

fn obstruction_table(s: &mut String, v: &ObstructionReport) {
    let _ = writeln!(s, "obstruction {} (n = {}, tolerance rel {:.0e} abs {:.0e})", v.scenario_id, v.n, v.tolerance.rel.0, v.tolerance.abs.0);
    for p in &v.points {
        let _ = writeln!(
            s,
            "  point {}  max |Bi - Bj| {:.3e}  worst/tol {:.3e}  {}",
            fmt_point(&p.point),
            p.max_residual.0,
            p.worst_ratio.0,
            mark(p.passed)
        );
        for f in &p.values {
            let _ = writeln!(s, "    {:26} {:>24.16e}", f.id, f.value.0);
        }
        for k in &p.skipped {
            let _ = writeln!(s, "    {:26} skipped: {}", k.id, k.reason);
        }
        for c in &p.conformal_checks {
            let _ = writeln!(s, "    conformal {:12} residual {:.3e} {}", c.quantity, c.residual.0, mark(c.passed));
        }
    }
    let _ = writeln!(s, "  {}", mark(v.passed));
}

fn identity_table(s: &mut String, v: &IdentityReport) {
    let _ = writeln!(s, "identities {} (tolerance {:.0e})", v.scenario_id, v.tolerance.0);
    let mut last: Option<&[Real]> = None;
    for r in &v.rows {
        if last != Some(&r.point[..]) {
            let _ = writeln!(s, "  point {}", fmt_point(&r.point));
            last = Some(&r.point);
        }
        let extra = r.note.as_deref().map(|n| format!("  ({})", n)).unwrap_or_default();
        let _ = writeln!(s, "    {:18} {:8} {:.3e}{}", r.identity_id, r.status, r.normalized_residual.0, extra);
    }
    let m = &v.summary;
    let _ = writeln!(s, "  pass {}, vacuous {}, skipped {}, fail {}", m.pass, m.vacuous, m.skipped, m.fail);
}

fn functional_table(s: &mut String, v: &FunctionalReport) {
    let _ = writeln!(s, "functional {} (n = {}, grid {})", v.scenario_id, v.n, v.grid);
    let (name, val) = if v.n == 2 { ("W2", v.w2) } else { ("W3", v.w3) };
    let _ = writeln!(
        s,
        "  {} = {:.12e}  (grid {}: {:.12e}, difference {:.2e})  volume {:.12e}",
        name,
        val.map_or(f64::NAN, |x| x.0),
        2 * v.grid,
        v.refined.0,
        v.quadrature_error.0,
        v.volume.0
    );
    if let Some(var) = &v.variation {
        let _ = writeln!(
            s,
            "  d/dt W3 = {:.12e}  6∫uB₃ = {:.12e}  residual {:.2e}  order {} (raw {})  {}",
            var.variation_fd.0,
            var.rhs.0,
            var.residual.0,
            var.order.map_or("n/a".into(), |o| format!("{:.2}", o.0)),
            var.raw_order.map_or("n/a".into(), |o| format!("{:.2}", o.0)),
            mark(var.passed)
        );
    }
    for d in &v.total_divergences {
        let _ = writeln!(s, "  ∫ {} = {:.3e} (grid {})", d.name, d.value.0, v.divergence_grid);
    }
    let _ = writeln!(s, "  {}", mark(v.passed));
}
