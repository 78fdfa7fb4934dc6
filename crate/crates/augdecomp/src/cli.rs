//! `augdecomp` subcommands: generate, solve, compare, complexity.
//!
//! Exit codes: 0 success, 2 usage, 3 numeric failure, 4 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use augdecomp_core::analysis::{self, ComplexityEstimate};
use augdecomp_core::eso::eso_beta;
use augdecomp_core::generators::{BlockAngularSpec, BoundedRowSpec, GeneratorSpec, RhsMode};
use augdecomp_core::separability::{partial_separability_degree, separability_report};
use augdecomp_core::solvers::{
    method_of_multipliers_with_executor, run_with, Algorithm, BlockExecutor, SerialExecutor,
    SolverConfig, SqaCurvature, StopRule,
};
use augdecomp_core::{BlockNorms, CompositeProblem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::executor::{RayonExecutor, WallClock};
use crate::experiments::{self, StepsizeExperiment, TimeUnitsExperiment};
use crate::io::{parse_config, write_trace_csv, Bundle, FormatError};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] augdecomp_core::Error),
    #[error("{0}")]
    Io(String),
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Core(c) => CliError::Numeric(c),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("I/O error: {e}"))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "augdecomp", version, about = "Decomposition methods for augmented Lagrangian subproblems")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random problem bundle plus a JSON sidecar.
    Generate(GenerateArgs),
    /// Run one solver on a bundle and write its trace.
    Solve(SolveArgs),
    /// Run an experiment and write the long-format comparison CSV.
    Compare(CompareArgs),
    /// Print rate and complexity estimates as JSON.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Family {
    BlockAngular,
    BoundedRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhsArg {
    Feasible,
    Gaussian,
}

impl From<RhsArg> for RhsMode {
    fn from(r: RhsArg) -> Self {
        match r {
            RhsArg::Feasible => RhsMode::Feasible,
            RhsArg::Gaussian => RhsMode::Gaussian,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub omega: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Block count (block angular).
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 15)]
    pub block_rows: usize,
    #[arg(long, default_value_t = 10)]
    pub block_cols: usize,
    #[arg(long, default_value_t = 0.3)]
    pub c_density: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d_density: f64,
    #[arg(long, default_value_t = 1)]
    pub linking_rows: usize,
    /// Row count (bounded row).
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    /// Column count (bounded row).
    #[arg(long, default_value_t = 1000)]
    pub cols: usize,
    #[arg(long, value_enum, default_value_t = RhsArg::Feasible)]
    pub rhs: RhsArg,
    /// Use the full-scale sizes instead of the desk-scale defaults.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Dqam,
    DqamFd,
    DqamSqa,
    Pcdm,
    PcdmFull,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Dqam => Algorithm::Dqam,
            AlgorithmArg::DqamFd => Algorithm::DqamFd,
            AlgorithmArg::DqamSqa => Algorithm::DqamSqa,
            AlgorithmArg::Pcdm => Algorithm::Pcdm,
            AlgorithmArg::PcdmFull => Algorithm::PcdmFull,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    /// `B_i = I`.
    Identity,
    /// `B_i = r·A_iᵀA_i`, giving `L_i = 1`.
    Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvatureArg {
    Lipschitz,
    Hessian,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// key = value file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::PcdmFull)]
    pub algorithm: AlgorithmArg,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// `f-ratio:<ε>`, `gap:<ε>`, `stationarity:<tol>` or `iters`.
    #[arg(long, default_value = "f-ratio:1e-4")]
    pub stop: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub processors: u64,
    /// Worker threads for block subproblems.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    #[arg(long, value_enum, default_value_t = MetricArg::Identity)]
    pub metric: MetricArg,
    /// Curvature for DQAM-SQA.
    #[arg(long, value_enum, default_value_t = CurvatureArg::Lipschitz)]
    pub curvature: CurvatureArg,
    /// Run the method of multipliers for this many outer iterations.
    #[arg(long)]
    pub outer_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub inner_tol: f64,
    /// Trace CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    /// Epochs against ω on block angular instances.
    Stepsize,
    /// Time units against τ on bounded-row instances.
    TimeUnits,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentArg,
    #[arg(long, value_delimiter = ',', required = true)]
    pub omegas: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
    pub taus: Vec<usize>,
    #[arg(long, default_value_t = 25)]
    pub reps: usize,
    /// Seed of the first replication; replication `k` uses `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    #[arg(long, default_value_t = 1000)]
    pub cols: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub omega: Option<usize>,
    /// Largest block Lipschitz constant L′.
    #[arg(long = "Lp")]
    pub l_prime: Option<f64>,
    /// Mean block Lipschitz constant L̄.
    #[arg(long = "Lbar")]
    pub l_bar: Option<f64>,
    /// μ_F(e).
    #[arg(long = "muF")]
    pub mu_big_f: Option<f64>,
    /// μ_f(e).
    #[arg(long = "muf")]
    pub mu_f: Option<f64>,
    /// Take μ_f(e) = μ_F(e).
    #[arg(long = "muF-eq-muf")]
    pub mu_eq: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    /// Processor count for the T(τ) curve.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub gap0: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// Measure ω, L and μ from a bundle instead.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
}

/// Parses and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let raw = match expand_config(raw) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(raw) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Splices `--key value` pairs from a `--config` file in front of the
/// command-line flags, which therefore take precedence.
fn expand_config(raw: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(pos) = raw.iter().position(|a| a == "--config") else {
        return Ok(raw);
    };
    let path = raw
        .get(pos + 1)
        .ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", Path::new(path).display())))?;
    let entries = parse_config(&text)?;
    let mut injected = Vec::new();
    for (k, v) in entries {
        if k == "config" || k == "bundle" && raw.iter().any(|a| a == "--bundle") {
            continue;
        }
        match v.as_str() {
            "true" => injected.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{k}")));
                injected.push(OsString::from(v));
            }
        }
    }
    // insert right after the subcommand name
    let at = raw
        .iter()
        .position(|a| a == "solve" || a == "compare" || a == "generate" || a == "complexity")
        .map_or(1, |i| i + 1);
    let mut out = raw[..at].to_vec();
    out.extend(injected);
    out.extend(raw[at..].iter().cloned());
    Ok(out)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::Compare(a) => cmd_compare(&a, out, err),
        Command::Complexity(a) => cmd_complexity(&a, out),
    }
}

fn executor(threads: u64) -> CliResult<Box<dyn BlockExecutor>> {
    if threads <= 1 {
        Ok(Box::new(SerialExecutor))
    } else {
        RayonExecutor::new(threads as usize)
            .map(|e| Box::new(e) as Box<dyn BlockExecutor>)
            .map_err(|e| CliError::Io(format!("cannot start thread pool: {e}")))
    }
}

pub fn generator_spec(a: &GenerateArgs) -> GeneratorSpec {
    let omega = a.omega as usize;
    match a.family {
        Family::BlockAngular => {
            let base = if a.full_scale {
                BlockAngularSpec::full_scale(omega, a.seed)
            } else {
                BlockAngularSpec {
                    n: a.n,
                    block_rows: a.block_rows,
                    block_cols: a.block_cols,
                    c_density: a.c_density,
                    ..BlockAngularSpec::desk(a.n, omega, a.seed)
                }
            };
            GeneratorSpec::BlockAngular(BlockAngularSpec {
                d_density: a.d_density,
                linking_rows: a.linking_rows,
                rhs: a.rhs.into(),
                ..base
            })
        }
        Family::BoundedRow => {
            let base = if a.full_scale {
                BoundedRowSpec::full_scale(omega, a.seed)
            } else {
                BoundedRowSpec {
                    rows: a.rows,
                    cols: a.cols,
                    ..BoundedRowSpec::desk(omega, a.seed)
                }
            };
            GeneratorSpec::BoundedRow(BoundedRowSpec {
                rhs: a.rhs.into(),
                ..base
            })
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a GeneratorSpec,
    rows: usize,
    cols: usize,
    blocks: usize,
    nnz: usize,
    omega: usize,
}

/// Path of the JSON sidecar written next to a bundle.
pub fn sidecar_path(bundle: &Path) -> PathBuf {
    let mut s = bundle.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = generator_spec(a);
    let matrix = spec.generate()?;
    let omega = partial_separability_degree(&matrix)?;
    if omega != spec.omega() {
        return Err(CliError::Numeric(augdecomp_core::Error::NotCertified(format!(
            "generated ω = {omega}, requested {}",
            spec.omega()
        ))));
    }
    let side = Sidecar {
        spec: &spec,
        rows: matrix.rows(),
        cols: matrix.cols(),
        blocks: matrix.num_blocks(),
        nnz: matrix.nnz(),
        omega,
    };
    let json = serde_json::to_string_pretty(&side).map_err(FormatError::from)?;
    Bundle::feasibility(matrix.clone()).save(&a.out)?;
    fs::write(sidecar_path(&a.out), json + "\n")?;
    writeln!(
        out,
        "wrote {} ({} x {}, {} blocks, nnz {}, omega {})",
        a.out.display(),
        matrix.rows(),
        matrix.cols(),
        matrix.num_blocks(),
        matrix.nnz(),
        omega
    )?;
    Ok(())
}

pub fn parse_stop(s: &str) -> CliResult<Option<StopSpec>> {
    let bad = || CliError::Usage(format!("invalid --stop `{s}`"));
    if s == "iters" {
        return Ok(None);
    }
    let (kind, val) = s.split_once(':').ok_or_else(bad)?;
    let v: f64 = val.parse().map_err(|_| bad())?;
    if !(v > 0.0) {
        return Err(bad());
    }
    match kind {
        "f-ratio" => Ok(Some(StopSpec::FRatio(v))),
        "gap" => Ok(Some(StopSpec::Gap(v))),
        "stationarity" => Ok(Some(StopSpec::Stationarity(v))),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopSpec {
    FRatio(f64),
    /// Gap to the certified optimum, computed on demand.
    Gap(f64),
    Stationarity(f64),
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let stop = parse_stop(&a.stop)?;
    let bundle = Bundle::load(&a.bundle)?;
    let mut p = bundle.problem()?;
    if a.metric == MetricArg::Hessian {
        p = p.rebased(BlockNorms::hessian_blocks(p.matrix(), p.r())?)?;
    }
    let stop = match stop {
        None => StopRule::IterOnly,
        Some(StopSpec::FRatio(e)) => StopRule::FRatio(e),
        Some(StopSpec::Stationarity(t)) => StopRule::Stationarity(t),
        Some(StopSpec::Gap(e)) => StopRule::Gap {
            eps: e,
            f_star: p.reference_optimum()?.value,
        },
    };
    let mut cfg = SolverConfig::new(a.algorithm.into())
        .seed(a.seed)
        .max_iters(a.max_iters)
        .stop(stop)
        .processors(a.processors as usize)
        .curvature(match a.curvature {
            CurvatureArg::Lipschitz => SqaCurvature::LipschitzMetric,
            CurvatureArg::Hessian => SqaCurvature::HessianBlock,
        });
    cfg.theta = a.theta;
    cfg.tau = a.tau;
    cfg.beta_override = a.beta;
    let exec = executor(a.threads)?;

    if let Some(outer) = a.outer_iters {
        let t = method_of_multipliers_with_executor(&p, &cfg, outer, a.inner_tol, None, exec.as_ref())?;
        for r in &t.records {
            writeln!(
                out,
                "outer={} residual={:e} inner_iterations={} inner_converged={}",
                r.k, r.residual_norm, r.inner_iterations, r.inner_converged
            )?;
        }
        return Ok(());
    }

    let clock = WallClock::new();
    let trace = run_with(&p, &cfg, None, exec.as_ref(), &clock)?;
    for w in &trace.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if let Some(path) = &a.out {
        let f = fs::File::create(path)?;
        write_trace_csv(std::io::BufWriter::new(f), &trace.records)?;
    }
    let last = trace.last();
    writeln!(
        out,
        "algorithm={} iterations={} epochs={} time_units={} processors={} F={:e} gap={:e} stop_met={}",
        trace.algorithm,
        last.k,
        last.epochs,
        last.time_units,
        a.processors,
        last.big_f,
        last.gap,
        trace.stop_met
    )?;
    Ok(())
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    if a.omegas.contains(&0) {
        return Err(CliError::Usage("every ω must be ≥ 1".into()));
    }
    let exec = executor(a.threads)?;
    let rows = match a.experiment {
        ExperimentArg::Stepsize => experiments::run_stepsize(
            &StepsizeExperiment {
                n: a.n,
                omegas: a.omegas.clone(),
                reps: a.reps,
                seed_base: a.seed,
                max_iters: a.max_iters,
            },
            exec.as_ref(),
        )?,
        ExperimentArg::TimeUnits => experiments::run_time_units(
            &TimeUnitsExperiment {
                rows: a.rows,
                cols: a.cols,
                omegas: a.omegas.clone(),
                taus: a.taus.clone(),
                reps: a.reps,
                seed_base: a.seed,
                max_iters: a.max_iters,
            },
            exec.as_ref(),
        )?,
    };
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if unconverged > 0 {
        writeln!(err, "warning: {unconverged} runs hit the iteration cap")?;
    }
    match &a.out {
        Some(path) => {
            let f = fs::File::create(path)?;
            experiments::write_compare_csv(std::io::BufWriter::new(f), &rows)?;
        }
        None => experiments::write_compare_csv(&mut *out, &rows)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Measured {
    omega: usize,
    omega_r: usize,
    lipschitz: Vec<f64>,
    mu_big_f_e: f64,
    mu_f_e: f64,
    mu_big_f_l: f64,
    mu_f_l: f64,
}

#[derive(Serialize)]
struct ComplexityOutput {
    estimate: ComplexityEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured: Option<Measured>,
}

struct RateInputs {
    omega: usize,
    n: Option<usize>,
    l_prime: Option<f64>,
    l_bar: Option<f64>,
    mu_big_f_e: Option<f64>,
    mu_f_e: Option<f64>,
    /// Exact constants for `w = L` when measured.
    mu_l: Option<(f64, f64)>,
}

fn measure(p: &CompositeProblem) -> CliResult<(RateInputs, Measured)> {
    let rep = separability_report(p.matrix())?;
    let l = p.lipschitz().to_vec();
    let n = l.len();
    let e = p.strong_convexity_constants(&vec![1.0; n])?;
    let lw = p.strong_convexity_constants(&l)?;
    let inputs = RateInputs {
        omega: rep.omega,
        n: Some(n),
        l_prime: Some(l.iter().cloned().fold(0.0, f64::max)),
        l_bar: Some(l.iter().sum::<f64>() / n as f64),
        mu_big_f_e: Some(e.mu_big_f),
        mu_f_e: Some(e.mu_f),
        mu_l: Some((lw.mu_big_f, lw.mu_f)),
    };
    let m = Measured {
        omega: rep.omega,
        omega_r: rep.omega_r,
        lipschitz: l,
        mu_big_f_e: e.mu_big_f,
        mu_f_e: e.mu_f,
        mu_big_f_l: lw.mu_big_f,
        mu_f_l: lw.mu_f,
    };
    Ok((inputs, m))
}

pub fn estimate_complexity(a: &ComplexityArgs) -> CliResult<serde_json::Value> {
    let (inputs, measured) = match &a.bundle {
        Some(path) => {
            let p = Bundle::load(path)?.problem()?;
            let (i, m) = measure(&p)?;
            (i, Some(m))
        }
        None => {
            let omega = a
                .omega
                .ok_or_else(|| CliError::Usage("--omega or --bundle is required".into()))?;
            if omega == 0 {
                return Err(CliError::Usage("--omega must be ≥ 1".into()));
            }
            let mu_f = if a.mu_eq { a.mu_big_f } else { a.mu_f };
            (
                RateInputs {
                    omega,
                    n: a.n,
                    l_prime: a.l_prime,
                    l_bar: a.l_bar,
                    mu_big_f_e: a.mu_big_f,
                    mu_f_e: mu_f,
                    mu_l: None,
                },
                None,
            )
        }
    };
    let mut est = ComplexityEstimate {
        omega: Some(inputs.omega),
        ..Default::default()
    };
    let w = inputs.omega as f64;

    // constants for w = L: exact when measured, μ(e)/L̄ otherwise
    let mu_l = match (inputs.mu_l, inputs.mu_big_f_e, inputs.mu_f_e, inputs.l_bar) {
        (Some(m), ..) => Some(m),
        (None, Some(mf), Some(mff), Some(lb)) => {
            est.notes
                .push("μ(L) approximated by μ(e)/L̄".into());
            Some((analysis::approx_mu_lipschitz(mf, lb)?, analysis::approx_mu_lipschitz(mff, lb)?))
        }
        _ => None,
    };
    match mu_l {
        Some((mf, mff)) if mf > 0.0 => est.q_pcdm = Some(analysis::q_pcdm(mf, mff, w)?),
        Some(_) => est.notes.push("q_pcdm unavailable: μ_F(L) = 0".into()),
        None => est.notes.push("q_pcdm unavailable: needs μ_F, μ_f and L̄".into()),
    }
    if inputs.omega < 2 {
        est.notes.push("DQAM rate unavailable for ω = 1".into());
    } else {
        match (inputs.mu_big_f_e, inputs.l_prime) {
            (Some(mf), Some(lp)) if mf > 0.0 => est.q_dqam = Some(analysis::q_dqam(mf, lp, w)?),
            (Some(_), Some(_)) => est.notes.push("q_dqam unavailable: μ_F(e) = 0".into()),
            _ => est.notes.push("q_dqam unavailable: needs μ_F(e) and L′".into()),
        }
        if let (Some(lp), Some(lb), Some(mf), Some(mff)) =
            (inputs.l_prime, inputs.l_bar, inputs.mu_big_f_e, inputs.mu_f_e)
        {
            match analysis::speedup_ratio(w, lp, lb, mf, mff) {
                Ok(s) => est.speedup = Some(s),
                Err(e) => est.notes.push(format!("speedup unavailable: {e}")),
            }
        }
    }
    if let (Some(n), Some((mf, mff))) = (inputs.n, mu_l) {
        let tau = a.tau.unwrap_or(n);
        if mf > 0.0 && tau >= 1 && tau <= n && inputs.omega <= n {
            let beta = eso_beta(inputs.omega, tau, n)?;
            match analysis::k_bound(n, tau as f64, beta, mf, mff, a.gap0, a.eps, a.rho) {
                Ok(k) => est.k_highprob = Some(k),
                Err(e) => est.notes.push(format!("K bound unavailable: {e}")),
            }
        }
    }
    if let (Some(n), Some(p)) = (inputs.n, a.p) {
        let grid: Vec<usize> = (1..=n).collect();
        let curve = analysis::t_curve(n, p, inputs.omega, &grid)?;
        est.tau_opt = Some(curve.tau_opt);
        est.t_curve = Some(curve);
    }
    let out = ComplexityOutput {
        estimate: est,
        measured,
    };
    serde_json::to_value(&out).map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_complexity(a: &ComplexityArgs, out: &mut dyn Write) -> CliResult<()> {
    let v = estimate_complexity(a)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?)?;
    Ok(())
}
