//! Command-line harness around the simulator and the analytic model.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use uasflow_core::scenario::{ExogenousConfig, ExogenousMode};
use uasflow_core::Scenario;

pub mod compare;
pub mod output;
pub mod sweep;

pub use compare::{compare, CompareReport, Tolerances};
pub use sweep::{sweep, SweepGrid, SweepRow};

/// Scenario shipped with the harness, used when no `--config` is given.
pub const BASELINE: &str = include_str!("../../../scenarios/baseline.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simulate,
    Analyze,
    Compare,
    Sweep,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "uasflow", about = "Managed UAS traffic: simulation and analytic congestion model", allow_negative_numbers = true)]
pub struct Args {
    /// Scenario file (TOML); the built-in baseline when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "simulate")]
    pub mode: Mode,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Exogenous arrival rate; adds an in-plane stream at level 2 if the
    /// scenario has none.
    #[arg(long = "lambda-e")]
    pub lambda_e: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<u32>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<u32>,
    /// Stop after this many slots.
    #[arg(long, conflicts_with = "uas")]
    pub slots: Option<u64>,
    /// Stop after deploying this many UAS.
    #[arg(long)]
    pub uas: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Simulation replications for `compare`.
    #[arg(long, default_value_t = 3)]
    pub replications: u32,
    /// Largest accepted |simulated busy fraction - analytic congestion|.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// Restrict the gated `compare` checks to zone `X,Y`; repeatable.
    #[arg(long = "zone", value_parser = parse_zone)]
    pub zones: Vec<(i32, i32)>,
    /// Write `events.log` when simulating.
    #[arg(long)]
    pub events: bool,
    /// Sweep values of lambda, comma separated or `start:end:step`.
    #[arg(long = "sweep-lambda")]
    pub sweep_lambda: Option<String>,
    #[arg(long = "sweep-M")]
    pub sweep_m: Option<String>,
    #[arg(long = "sweep-eta")]
    pub sweep_eta: Option<String>,
    /// Skip simulation in `sweep`.
    #[arg(long = "no-sim")]
    pub no_sim: bool,
}

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

/// Validated scenario plus everything the commands need.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub scenario: Scenario,
    pub out: PathBuf,
    pub replications: u32,
    pub tolerance: f64,
    pub zones: Vec<(i32, i32)>,
    pub grid: SweepGrid,
    pub sweep_sim: bool,
}

fn parse_zone(s: &str) -> Result<(i32, i32), String> {
    match parse_list::<i32>(s)?.as_slice() {
        [x, y] => Ok((*x, *y)),
        _ => Err(format!("zone `{s}` is not X,Y")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',').map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list entry `{x}`"))).collect()
}

/// Values from `a:b:step` (inclusive) or a comma list.
fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return parse_list(s);
    }
    let v: Vec<f64> = parse_list(&parts.join(","))?;
    let (a, b, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || b < a {
        return Err(format!("bad range `{s}`"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let cfg = |e: String| CliError::Config(e);
        let text = match &args.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| cfg(format!("{}: {e}", p.display())))?,
            None => BASELINE.to_string(),
        };
        let mut sc: Scenario = toml::from_str(&text).map_err(|e| cfg(e.to_string()))?;
        if let Some(v) = args.seed {
            sc.seed = v;
        }
        if let Some(v) = args.lambda {
            sc.lambda = v;
        }
        if let Some(v) = args.m {
            sc.grid.params.m = v;
        }
        if let Some(v) = args.eta {
            sc.grid.params.eta = v;
        }
        if let Some(v) = args.l {
            sc.grid.params.l = v;
            sc.grid.end = sc.grid.start.offset(0, (2 * v as i32 + 1) * sc.grid.params.y_e as i32);
        }
        if let Some(v) = args.lambda_e {
            match &mut sc.exogenous {
                Some(e) => e.lambda_e = v,
                None => {
                    sc.exogenous =
                        Some(ExogenousConfig { lambda_e: v, level: 2, offset: None, dx: 1, mode: ExogenousMode::InPlane })
                }
            }
        }
        if let Some(v) = args.slots {
            sc.stop.slots = Some(v);
            sc.stop.uas = None;
        }
        if let Some(v) = args.uas {
            sc.stop.uas = Some(v);
            sc.stop.slots = None;
        }
        if args.events {
            sc.metrics.log_events = true;
        }
        sc.validate().map_err(|e| cfg(e.to_string()))?;
        if args.replications == 0 {
            return Err(cfg("replications must be at least 1".into()));
        }
        if !(args.tolerance >= 0.0) {
            return Err(cfg("tolerance must be non-negative".into()));
        }
        let p = sc.params();
        let grid = SweepGrid {
            lambda: args.sweep_lambda.as_deref().map(parse_range).transpose().map_err(cfg)?.unwrap_or(vec![sc.lambda]),
            m: args.sweep_m.as_deref().map(parse_list).transpose().map_err(cfg)?.unwrap_or(vec![p.m]),
            eta: args.sweep_eta.as_deref().map(parse_range).transpose().map_err(cfg)?.unwrap_or(vec![p.eta]),
        };
        grid.validate(&sc).map_err(cfg)?;
        Ok(RunConfig {
            mode: args.mode,
            scenario: sc,
            out: args.out.clone(),
            replications: args.replications,
            tolerance: args.tolerance,
            zones: args.zones.clone(),
            grid,
            sweep_sim: !args.no_sim,
        })
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let mut sim = uasflow_core::Simulation::new(cfg.scenario.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    while sim.step().map_err(|e| CliError::Runtime(e.into()))? {}
    let m = sim.metrics();
    let out = &cfg.out;
    output::write_json(&out.join("metrics.json"), &m)?;
    output::write_csv(&out.join("zones.csv"), m.zone_rows())?;
    output::write_json(&out.join("spread.json"), &m.spread)?;
    if cfg.scenario.metrics.log_events {
        output::write_events(&out.join("events.log"), sim.events())?;
    }
    let v = m.invariants.violations();
    if v > 0 {
        return Err(CliError::Runtime(anyhow::anyhow!("{v} invariant violations")));
    }
    Ok(())
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<(), CliError> {
    let sc = uasflow_queueing::AnalyticScenario::from_scenario(&cfg.scenario).map_err(|e| CliError::Config(e.to_string()))?;
    let r = uasflow_queueing::expected_spread(&sc, &scan_all());
    output::write_csv(&cfg.out.join("zones.csv"), r.zones.iter().map(output::AnalyticRow::from))?;
    output::write_json(&cfg.out.join("spread.json"), &r.spread)?;
    output::write_json(&cfg.out.join("roots.json"), &output::root_report(&r))?;
    let flagged = r.flagged();
    if !flagged.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("fixed point above tolerance in zones {flagged:?}")));
    }
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let tol = Tolerances { theta0: cfg.tolerance, zones: cfg.zones.clone(), ..Tolerances::default() };
    let report = compare(&cfg.scenario, cfg.replications, &tol)?;
    output::write_json(&cfg.out.join("compare_report.json"), &report)?;
    output::write_csv(&cfg.out.join("compare.csv"), report.zones.iter())?;
    if !report.pass {
        return Err(CliError::Runtime(anyhow::anyhow!("{} comparisons exceed tolerance", report.failures)));
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let res = sweep(&cfg.scenario, &cfg.grid, cfg.sweep_sim, &cfg.out)?;
    if !res.failed.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("{} sweep points failed", res.failed.len())));
    }
    Ok(())
}

/// Solver options used by the commands: full scan so every bracket is reported.
pub fn scan_all() -> uasflow_queueing::SolverOptions {
    uasflow_queueing::SolverOptions { scan_all: true, ..Default::default() }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(&cfg.out)?;
    match cfg.mode {
        Mode::Simulate => cmd_simulate(cfg),
        Mode::Analyze => cmd_analyze(cfg),
        Mode::Compare => cmd_compare(cfg),
        Mode::Sweep => cmd_sweep(cfg),
    }
}

fn ensure_dir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", p.display())))
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let res = RunConfig::from_args(&args).and_then(|cfg| run(&cfg));
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("uasflow: {e}");
            e.exit_code()
        }
    }
}
