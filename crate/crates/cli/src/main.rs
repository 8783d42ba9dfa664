//! `otecon`: run one solver on CSV inputs and print a JSON report.
//!
//! Exit status: 0 on success, 2 on input errors, 3 when a solver does not
//! converge (the report is still written, with `"converged": false`).
//! `OTECON_MAX_ITER` overrides the iteration cap of every iterative solver.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "otecon", version, about = "Optimal transport solvers for econometrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Exact discrete optimal transport (network simplex)
    Ot(OtArgs),
    /// Entropic optimal transport (log-domain Sinkhorn)
    Sinkhorn(SinkhornArgs),
    /// Unbalanced entropic optimal transport
    Uot(UotArgs),
    /// Wasserstein-p distance between two samples on the line
    W1d(W1dArgs),
    /// Closed-form W2 and transport map between Gaussians
    GaussianW2(GaussianArgs),
    /// Sliced Wasserstein distance between two point clouds
    Sliced(SlicedArgs),
    /// Semi-discrete transport from the uniform cube to weighted sites
    Semidiscrete(SemidiscreteArgs),
    /// Empirical vector ranks on the Halton grid
    Ranks(RanksArgs),
    /// Bounds on E h(Y0, Y1) over couplings of two samples
    BoundsTe(BoundsTeArgs),
    /// Sharp bounds on the average effect for a rank subgroup
    BoundsSubgroup(WindowArgs),
    /// Bounds on the proportion of winners in a rank subgroup
    BoundsWinners(WindowArgs),
    /// Zero-one cost transport with its set-function dual
    BinaryOt(BinaryOtArgs),
    /// Worst-case expectation over a transport ball
    Dro(DroArgs),
    /// Surplus identified from a matching table
    MatchIdentify(TableArgs),
    /// Equilibrium matching for a given surplus
    MatchEquilibrium(EquilibriumArgs),
    /// Moment-matching estimate of surplus parameters
    MatchFit(FitArgs),
    /// Sparse cost recovery from an observed plan
    MatchSista(SistaArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ot(_) => "ot",
            Command::Sinkhorn(_) => "sinkhorn",
            Command::Uot(_) => "uot",
            Command::W1d(_) => "w1d",
            Command::GaussianW2(_) => "gaussian-w2",
            Command::Sliced(_) => "sliced",
            Command::Semidiscrete(_) => "semidiscrete",
            Command::Ranks(_) => "ranks",
            Command::BoundsTe(_) => "bounds-te",
            Command::BoundsSubgroup(_) => "bounds-subgroup",
            Command::BoundsWinners(_) => "bounds-winners",
            Command::BinaryOt(_) => "binary-ot",
            Command::Dro(_) => "dro",
            Command::MatchIdentify(_) => "match-identify",
            Command::MatchEquilibrium(_) => "match-equilibrium",
            Command::MatchFit(_) => "match-fit",
            Command::MatchSista(_) => "match-sista",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Output {
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct OtArgs {
    /// Source measure, rows `w,x1..xd`
    #[arg(long)]
    pub mu: PathBuf,
    /// Target measure, rows `w,x1..xd`
    #[arg(long)]
    pub nu: PathBuf,
    /// Cost matrix; squared Euclidean distance between the atoms if absent
    #[arg(long)]
    pub cost: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct SinkhornArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: OtArgs,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct UotArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub entropic: SinkhornArgs,
    /// Marginal penalty on the source side
    #[arg(long, default_value_t = 1.0)]
    pub lam_mu: f64,
    /// Marginal penalty on the target side
    #[arg(long, default_value_t = 1.0)]
    pub lam_nu: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct W1dArgs {
    /// Sample, one value per row
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct GaussianArgs {
    /// Mean on the first row, covariance rows after it
    #[arg(long)]
    pub g1: PathBuf,
    #[arg(long)]
    pub g2: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct SlicedArgs {
    /// Points, one per row
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 100)]
    pub n_dir: usize,
    /// Seed for the projection directions; the value depends on it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct SemidiscreteArgs {
    /// Sites with target weights, rows `w,x1..xd` in [0,1]^d
    #[arg(long)]
    pub nu: PathBuf,
    /// Grid points per axis; 512, 256, 64 for d = 1, 2, 3 if absent
    #[arg(long)]
    pub grid_res: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct RanksArgs {
    /// Observations, one point per row
    #[arg(long)]
    pub sample: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// y1 - y0
    Effect,
    /// y0 * y1
    Product,
    /// (y1 - y0)^2
    SquaredDiff,
    /// |y1 - y0|
    AbsDiff,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsTeArgs {
    /// Untreated outcomes, one per row
    #[arg(long)]
    pub y0: PathBuf,
    /// Treated outcomes, one per row
    #[arg(long)]
    pub y1: PathBuf,
    #[arg(long, value_enum, default_value_t = Functional::Effect)]
    pub h: Functional,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct WindowArgs {
    #[arg(long)]
    pub y0: PathBuf,
    #[arg(long)]
    pub y1: PathBuf,
    /// Lower end of the untreated-rank window
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    /// Upper end of the untreated-rank window
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct BinaryOtArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// 0/1 matrix; the cost is 1 on the relation
    #[arg(long)]
    pub gamma: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct DroArgs {
    /// Values of f on the support, one per row
    #[arg(long)]
    pub f: PathBuf,
    /// Discrepancy matrix, rows index candidates and columns reference atoms
    #[arg(long)]
    pub delta: PathBuf,
    /// Reference weights, one per row
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub rho: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct TableArgs {
    /// Matching table, rows `x,y,count`; `y = 0` and `x = 0` rows are singles
    #[arg(long)]
    pub table: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct EquilibriumArgs {
    /// Surplus matrix
    #[arg(long)]
    pub phi: PathBuf,
    /// Type masses on the first side, one per row
    #[arg(long)]
    pub mu: PathBuf,
    /// Type masses on the second side, one per row
    #[arg(long)]
    pub nu: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Surplus basis, rows `x,y,k,value`
    #[arg(long)]
    pub basis: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct SistaArgs {
    /// Observed plan; its row and column sums are the margins
    #[arg(long)]
    pub plan: PathBuf,
    /// Cost basis, rows `x,y,k,value`
    #[arg(long)]
    pub basis: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l1: f64,
    /// Proximal step; `1 / max_k sum phi_k^2` if absent
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Stalled(String),
}

impl From<otecon::Error> for CliError {
    fn from(e: otecon::Error) -> Self {
        use otecon::Error::*;
        match e {
            SolverStall(_) | NonIdentification(_) | StepSize(_) => CliError::Stalled(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Solver output: a payload, diagnostics and whether the solver converged.
pub struct Report {
    pub result: Value,
    pub diagnostics: Value,
    pub converged: bool,
}

fn max_iter_override() -> Result<Option<usize>, CliError> {
    match std::env::var("OTECON_MAX_ITER") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("OTECON_MAX_ITER: expected a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn out_path(cmd: &Command) -> Option<&PathBuf> {
    let out = match cmd {
        Command::Ot(a) => &a.output,
        Command::Sinkhorn(a) => &a.problem.output,
        Command::Uot(a) => &a.entropic.problem.output,
        Command::W1d(a) => &a.output,
        Command::GaussianW2(a) => &a.output,
        Command::Sliced(a) => &a.output,
        Command::Semidiscrete(a) => &a.output,
        Command::Ranks(a) => &a.output,
        Command::BoundsTe(a) => &a.output,
        Command::BoundsSubgroup(a) | Command::BoundsWinners(a) => &a.output,
        Command::BinaryOt(a) => &a.output,
        Command::Dro(a) => &a.output,
        Command::MatchIdentify(a) => &a.output,
        Command::MatchEquilibrium(a) => &a.output,
        Command::MatchFit(a) => &a.output,
        Command::MatchSista(a) => &a.output,
    };
    out.out.as_ref()
}

fn emit(cmd: &Command, doc: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("report is valid JSON");
    text.push('\n');
    match out_path(cmd) {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

fn run(cmd: &Command) -> Result<bool, CliError> {
    let max_iter = max_iter_override()?;
    let report = commands::dispatch(cmd, max_iter)?;
    let mut config = serde_json::to_value(cmd).expect("arguments serialize");
    config["max_iter"] = json!(max_iter);
    let mut diagnostics = report.diagnostics;
    diagnostics["converged"] = json!(report.converged);
    let doc = json!({
        "command": cmd.name(),
        "version": otecon::VERSION,
        "config": config,
        "result": report.result,
        "diagnostics": diagnostics,
    });
    emit(cmd, &doc)?;
    Ok(report.converged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: {} did not converge", cli.command.name());
            ExitCode::from(3)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Stalled(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
