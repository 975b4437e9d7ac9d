//! Command-line driver.
//!
//! Exit status: 0 when every check passes, 1 on input errors, 2 when a
//! certification, positivity or verification check fails. Reports are
//! written to a temporary file next to the destination and renamed into
//! place, so a failed run leaves no partial output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::heat::heat_coefficients;
use crate::kernel::{inverse_fourier_kernel, volterra_check, KernelGrid, Quadrature};
use crate::parametrix::{compose_check, parametrix_components, OperatorSpec};
use crate::summation::{certify_term, summation_for, BoundKind, Method, RealizedSymbol, SummationConfig};
use crate::symbol::{check_analyticity, AnalyticityGrid, GridPolicy, Symbol, SymbolExpansion};

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "volterra", version, about = "Volterra symbol calculus toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize an expansion as a symbol and certify it.
    Sum(SumArgs),
    /// Parametrix components of `P + ∂_t` and the composition residual.
    Parametrix(Common),
    /// Small-time heat coefficients `c_j(x)`.
    Heat(HeatArgs),
    /// Space-time kernel slice and negative-time check.
    Kernel(KernelArgs),
    /// Re-run checks on a realized symbol.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input JSON file.
    #[arg(long, short, visible_aliases = ["op", "symbol"])]
    pub input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Truncation depth: last summed index, parametrix order or report depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Derivative budget `D`.
    #[arg(long)]
    pub budget: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma separated shell radii.
    #[arg(long, value_delimiter = ',')]
    pub shells: Option<Vec<f64>>,
    /// Tolerance of the command's numeric check.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_method, default_value = "analytic")]
    pub method: Method,
}

#[derive(Debug, Clone, Args)]
pub struct HeatArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma separated sample points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub xs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: Common,
    /// Summation method when the input is an expansion.
    #[arg(long, value_parser = parse_method, default_value = "analytic")]
    pub method: Method,
    /// Time range `a..b`.
    #[arg(long = "t", value_parser = parse_range, allow_hyphen_values = true, default_value = "-2..2")]
    pub t_range: (f64, f64),
    #[arg(long, default_value_t = 40)]
    pub t_points: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub y: Vec<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub x: f64,
    /// Contour shift; 1 for holomorphic symbols and 0 otherwise by default.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Negative-time window `a..b`; all sampled negative times by default.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateKind {
    /// Tail bounds of the individual weighted terms.
    Terms,
    /// Remainder bounds of the realized symbol against its expansion.
    Expansion,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Check holomorphy in `τ` on the lower half-plane.
    #[arg(long)]
    pub analyticity: bool,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub estimates: Vec<EstimateKind>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected `a..b`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
    if !(a < b) {
        return Err(format!("range start {a} must be below end {b}"));
    }
    Ok((a, b))
}

/// Validated settings echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub input: String,
    pub method: Option<Method>,
    pub depth: Option<usize>,
    pub budget: u32,
    pub policy: GridPolicy,
    pub tol: Option<f64>,
}

impl RunConfig {
    fn new(command: &str, c: &Common, method: Option<Method>) -> Result<Self> {
        let defaults = SummationConfig::default();
        let mut policy = defaults.policy.clone();
        policy.seed = c.seed.unwrap_or(DEFAULT_SEED);
        if let Some(shells) = &c.shells {
            if shells.is_empty() || shells.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::invalid("shells must be positive and finite"));
            }
            if shells.windows(2).any(|p| !(p[1] > p[0])) {
                return Err(Error::invalid("shells must increase"));
            }
            policy.shells = shells.clone();
        }
        if let Some(tol) = c.tol {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(Error::invalid("tolerance must be positive"));
            }
        }
        Ok(RunConfig {
            command: command.to_string(),
            input: c.input.display().to_string(),
            method,
            depth: c.depth,
            budget: c.budget.unwrap_or(defaults.budget),
            policy,
            tol: c.tol,
        })
    }

    fn summation(&self) -> SummationConfig {
        SummationConfig {
            n_max: self.depth,
            budget: self.budget,
            policy: self.policy.clone(),
            ..SummationConfig::default()
        }
    }
}

/// Outcome of a command: the report and whether all checks passed.
struct Outcome {
    body: String,
    pass: bool,
}

fn json_outcome(mut value: Value, cfg: &RunConfig, pass: bool) -> Outcome {
    if let Value::Object(map) = &mut value {
        map.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
        map.insert("pass".into(), Value::Bool(pass));
    }
    let mut body = serde_json::to_string_pretty(&value).expect("report serializes");
    body.push('\n');
    Outcome { body, pass }
}

fn read_input(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

/// Write to a sibling temporary file, then rename over `path`.
fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn cmd_sum(a: &SumArgs) -> Result<Outcome> {
    let cfg = RunConfig::new("sum", &a.common, Some(a.method))?;
    let exp = SymbolExpansion::from_json(&read_input(&a.common.input)?)?;
    match summation_for(a.method, &exp, &cfg.summation()) {
        Ok(q) => {
            let pass = q.certified();
            let value: Value = serde_json::from_str(&q.to_json())?;
            Ok(json_outcome(value, &cfg, pass))
        }
        Err(Error::Certification(msg)) => {
            Ok(json_outcome(json!({ "method": a.method.name(), "error": msg }), &cfg, false))
        }
        Err(e) => Err(e),
    }
}

fn cmd_parametrix(c: &Common) -> Result<Outcome> {
    let cfg = RunConfig::new("parametrix", c, None)?;
    let spec = OperatorSpec::from_json(&read_input(&c.input)?)?;
    let big_j = c.depth.unwrap_or(4);
    let comps = match parametrix_components(&spec, big_j) {
        Ok(comps) => comps,
        Err(Error::NotPositive(msg)) => {
            return Ok(json_outcome(json!({ "operator": spec.to_json(), "error": msg }), &cfg, false));
        }
        Err(e) => return Err(e),
    };
    let residual = compose_check(&spec, &comps, big_j)?;
    let mut value = comps.to_json_value();
    value["residual"] = residual.to_json_value(spec.ctx());
    Ok(json_outcome(value, &cfg, residual.is_exact()))
}

fn cmd_heat(a: &HeatArgs) -> Result<Outcome> {
    let cfg = RunConfig::new("heat", &a.common, None)?;
    let spec = OperatorSpec::from_json(&read_input(&a.common.input)?)?;
    let quad = Quadrature { tol: a.common.tol, ..Quadrature::default() };
    match heat_coefficients(&spec, a.common.depth.unwrap_or(2), &a.xs, &quad) {
        Ok(h) => Ok(json_outcome(serde_json::to_value(&h)?, &cfg, true)),
        Err(e @ (Error::NotPositive(_) | Error::Resolution(_))) => {
            Ok(json_outcome(json!({ "operator": spec.name, "error": e.to_string() }), &cfg, false))
        }
        Err(e) => Err(e),
    }
}

/// A realized symbol file, or an expansion realized with `method`.
fn load_realized(text: &str, method: Method, cfg: &SummationConfig) -> Result<RealizedSymbol> {
    let value: Value = serde_json::from_str(text)?;
    if value.get("weights").is_some() && value.get("source").is_some() {
        RealizedSymbol::from_json(text, cfg)
    } else {
        summation_for(method, &SymbolExpansion::from_json(text)?, cfg)
    }
}

fn cmd_kernel(a: &KernelArgs) -> Result<Outcome> {
    let cfg = RunConfig::new("kernel", &a.common, Some(a.method))?;
    let q = load_realized(&read_input(&a.common.input)?, a.method, &cfg.summation())?;
    let ts = KernelGrid::linspace(a.t_range.0, a.t_range.1, a.t_points);
    let grid = KernelGrid::new(a.x, a.y.clone(), ts)?;
    let sigma = a.sigma.unwrap_or(if q.tau_analytic() { 1.0 } else { 0.0 });
    let slice = inverse_fourier_kernel(&q, q.source.w(), &grid, sigma, &Quadrature::default())?;
    let window = match a.window {
        Some(w) => w,
        None => {
            let neg: Vec<f64> = grid.ts.iter().cloned().filter(|&t| t < 0.0).collect();
            let lo = neg.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if neg.is_empty() {
                return Err(Error::invalid("the time range has no negative samples"));
            }
            (lo, hi)
        }
    };
    let report = volterra_check(&slice, window, a.common.tol.unwrap_or(1e-5))?;
    match a.format {
        Format::Json => Ok(json_outcome(
            json!({ "method": q.method.name(), "weights": q.weights, "slice": slice, "volterra": report }),
            &cfg,
            report.pass,
        )),
        Format::Csv => {
            eprintln!("{}", serde_json::to_string(&report)?);
            Ok(Outcome { body: slice.to_csv(), pass: report.pass })
        }
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let cfg = RunConfig::new("verify", &a.common, None)?;
    let text = read_input(&a.common.input)?;
    let mut scfg = cfg.summation();
    scfg.n_max = None;
    scfg.report_depth = a.common.depth.unwrap_or(scfg.report_depth);
    let q = RealizedSymbol::from_json(&text, &scfg)?;
    let all = !a.analyticity && a.estimates.is_empty();
    let mut reports = Vec::new();
    if all || a.analyticity {
        let r = check_analyticity(&q, &AnalyticityGrid::standard(q.source.n()))?;
        let pass = r.max_c() <= a.common.tol.unwrap_or(1e-6);
        reports.push(json!({ "check": "analyticity", "pass": pass, "report": r }));
    }
    if all || a.estimates.contains(&EstimateKind::Terms) {
        let kind = BoundKind::for_method(q.method);
        let w = q.source.w();
        for (j, term) in q.terms().iter().enumerate() {
            let wt = q.weights[j];
            let scale = if q.method == Method::Translation { wt.powf(1.0 / w as f64) } else { wt };
            let (r, _) = certify_term(term.as_ref(), j, q.orders[j], kind, cfg.budget, scale, &cfg.policy, w)?;
            reports.push(json!({ "check": "terms", "pass": r.pass, "report": r }));
        }
    }
    if all || a.estimates.contains(&EstimateKind::Expansion) {
        for r in &q.certification {
            reports.push(json!({ "check": "expansion", "pass": r.pass, "report": r }));
        }
    }
    let pass = reports.iter().all(|r| r["pass"] == Value::Bool(true));
    Ok(json_outcome(json!({ "method": q.method.name(), "checks": reports }), &cfg, pass))
}

fn configure_threads() {
    if let Ok(v) = std::env::var("VOLTERRA_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Certification(_) | Error::NotPositive(_) | Error::Resolution(_) => 2,
        _ => 1,
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    let (output, result) = match &cli.command {
        Command::Sum(a) => (&a.common.output, cmd_sum(a)),
        Command::Parametrix(c) => (&c.output, cmd_parametrix(c)),
        Command::Heat(a) => (&a.common.output, cmd_heat(a)),
        Command::Kernel(a) => (&a.common.output, cmd_kernel(a)),
        Command::Verify(a) => (&a.common.output, cmd_verify(a)),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let written = match output {
        Some(path) => write_atomic(path, &outcome.body),
        None => std::io::stdout().write_all(outcome.body.as_bytes()).map_err(Error::from),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    if outcome.pass {
        0
    } else {
        2
    }
}
