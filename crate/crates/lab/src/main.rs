use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use obstruction_core::obstruction::FormulaId;
use obstruction_lab::run::{exit_code, run, table};
use obstruction_lab::{scenario, Command, LabError, Pool, RunConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Stacks,
    Expansion,
    Obstruction,
    Identities,
    Variation,
    All,
    Validate,
    /// Print the built-in scenario ids.
    List,
    /// Print a built-in scenario as JSON.
    Show,
}

/// Singular Yamabe obstructions B₂ and B₃ for catalog or file scenarios.
#[derive(Parser, Debug)]
#[command(name = "obstruction-lab", version)]
struct Cli {
    command: Cmd,
    /// Built-in scenario id or path to a scenario JSON file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value_t = 6)]
    jet_order: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol_rel: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_abs: f64,
    /// Write the JSON report here; `-` writes it to stdout instead of the table.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Comma-separated formula ids (obstruction and all).
    #[arg(long, value_delimiter = ',')]
    formulas: Vec<String>,
    /// Quadrature points per axis for closed scenarios.
    #[arg(long)]
    grid: Option<usize>,
    /// Central-difference half-widths, each twice the previous.
    #[arg(long, value_delimiter = ',')]
    t_steps: Vec<f64>,
    /// Skip the normal-coordinate Yamabe solve.
    #[arg(long)]
    no_oracle: bool,
    /// Scenario parameter, `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Cylinder radius.
    #[arg(long)]
    a: Option<String>,
    /// Sphere radius.
    #[arg(long)]
    rho: Option<String>,
    /// Size of the metric perturbation.
    #[arg(long)]
    eps: Option<String>,
    /// Height function of a graph.
    #[arg(long)]
    f: Option<String>,
    /// Conformal factor of conf_flat.
    #[arg(long)]
    phi: Option<String>,
    /// Variation direction on closed scenarios.
    #[arg(long)]
    u: Option<String>,
    /// Conformal factor for the covariance checks.
    #[arg(long)]
    conformal: Option<String>,
}

fn overrides(cli: &Cli) -> Result<scenario::Overrides, LabError> {
    let mut m = BTreeMap::new();
    for p in &cli.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| LabError::Input(format!("--param expects key=value, got `{}`", p)))?;
        m.insert(k.trim().to_string(), v.to_string());
    }
    let named = [("a", &cli.a), ("rho", &cli.rho), ("eps", &cli.eps), ("f", &cli.f), ("phi", &cli.phi), ("u", &cli.u)];
    for (k, v) in named {
        if let Some(v) = v {
            m.insert(k.to_string(), v.clone());
        }
    }
    Ok(m)
}

fn command(c: Cmd) -> Option<Command> {
    Some(match c {
        Cmd::Stacks => Command::Stacks,
        Cmd::Expansion => Command::Expansion,
        Cmd::Obstruction => Command::Obstruction,
        Cmd::Identities => Command::Identities,
        Cmd::Variation => Command::Variation,
        Cmd::All => Command::All,
        Cmd::Validate => Command::Validate,
        Cmd::List | Cmd::Show => return None,
    })
}

fn emit(cli: &Cli, json: &str, text: &str) -> Result<(), LabError> {
    match &cli.json_out {
        Some(p) if p.as_os_str() == "-" => println!("{}", json),
        Some(p) => {
            std::fs::write(p, format!("{}\n", json))
                .map_err(|e| LabError::Input(format!("cannot write {}: {}", p.display(), e)))?;
            print!("{}", text);
        }
        None => print!("{}", text),
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32, LabError> {
    let params = overrides(cli)?;
    let Some(cmd) = command(cli.command) else {
        if let Cmd::List = cli.command {
            for id in scenario::CATALOG {
                println!("{}", id);
            }
        } else {
            let id = cli.scenario.as_deref().ok_or_else(|| LabError::Input("show needs --scenario".into()))?;
            let s = scenario::load(id, &params)?;
            println!("{}", serde_json::to_string_pretty(&s).expect("scenarios serialize"));
        }
        return Ok(0);
    };
    let id = cli.scenario.as_deref().ok_or_else(|| LabError::Input("--scenario is required".into()))?;
    let mut sc = scenario::load(id, &params)?;
    if let Some(c) = &cli.conformal {
        sc.conformal_factor = Some(c.clone());
    }
    let resolved = sc.resolve(cli.grid)?;
    let mut cfg = RunConfig::new(cmd);
    cfg.jet_order = cli.jet_order;
    cfg.tol.rel = cli.tol_rel;
    cfg.tol.abs = cli.tol_abs;
    cfg.oracle = !cli.no_oracle;
    cfg.formulas = cli.formulas.iter().map(|f| FormulaId::parse(f.trim())).collect::<Result<_, _>>()?;
    if !cli.t_steps.is_empty() {
        cfg.t_steps = cli.t_steps.clone();
    }
    let pool = Pool::from_env().map_err(LabError::Input)?;
    let report = run(&cfg, &resolved, &pool)?;
    emit(cli, &report.to_json(), &table(&report))?;
    Ok(exit_code(&report))
}

fn fail(e: &LabError, cli: Option<&Cli>) -> ExitCode {
    let record = serde_json::to_string(&e.record()).expect("records serialize");
    eprintln!("error: {}", e);
    eprintln!("{}", record);
    if let Some(Cli { json_out: Some(p), .. }) = cli {
        if p.as_os_str() == "-" {
            println!("{}", record);
        } else {
            let _ = std::fs::write(p, format!("{}\n", record));
        }
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(&LabError::Input(e.kind().to_string()), None);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e, Some(&cli)),
    }
}
