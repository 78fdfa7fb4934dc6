//! The two numerical experiments: epochs against the separability degree
//! on block angular instances, and parallel time units against the number
//! of processors on bounded-row instances.
//!
//! Both use the stopping rule `f(x) ≤ 10⁻⁴·bᵀb` with `r = 1` and `Ψ ≡ 0`.

use augdecomp_core::generators::{gen_block_angular, gen_bounded_row, BlockAngularSpec, BoundedRowSpec};
use augdecomp_core::solvers::{run_with, Algorithm, BlockExecutor, SolverConfig, StopRule};
use augdecomp_core::{BlockNorms, CompositeProblem, Error, Result};
use serde::Serialize;

use crate::executor::WallClock;

pub const STOP_RATIO: f64 = 1e-4;

pub const COMPARE_HEADER: [&str; 8] = [
    "family",
    "omega",
    "tau",
    "algorithm",
    "seed",
    "epochs",
    "time_units",
    "wall_ms",
];

/// One row of the long-format comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub family: &'static str,
    pub omega: usize,
    pub tau: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub epochs: f64,
    pub time_units: u64,
    pub wall_ms: f64,
    /// Whether the stopping rule was met within the iteration cap.
    #[serde(skip)]
    pub converged: bool,
}

impl CompareRow {
    pub fn csv_fields(&self) -> [String; 8] {
        [
            self.family.to_owned(),
            self.omega.to_string(),
            self.tau.to_string(),
            self.algorithm.name().to_owned(),
            self.seed.to_string(),
            self.epochs.to_string(),
            self.time_units.to_string(),
            self.wall_ms.to_string(),
        ]
    }
}

pub fn write_compare_csv(w: impl std::io::Write, rows: &[CompareRow]) -> crate::io::FormatResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COMPARE_HEADER)?;
    for r in rows {
        out.write_record(r.csv_fields())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StepsizeExperiment {
    /// Block count; raised to `ω` for any `ω > n`.
    pub n: usize,
    pub omegas: Vec<usize>,
    pub reps: usize,
    pub seed_base: u64,
    pub max_iters: usize,
}

impl StepsizeExperiment {
    pub fn desk(omegas: Vec<usize>, reps: usize) -> Self {
        Self {
            n: 20,
            omegas,
            reps,
            seed_base: 0,
            max_iters: 1_000_000,
        }
    }
}

fn stop_config(alg: Algorithm, max_iters: usize) -> SolverConfig {
    SolverConfig::new(alg)
        .max_iters(max_iters)
        .stop(StopRule::FRatio(STOP_RATIO))
}

fn row(
    family: &'static str,
    omega: usize,
    tau: usize,
    seed: u64,
    trace: &augdecomp_core::IterationTrace,
) -> CompareRow {
    let last = trace.last();
    CompareRow {
        family,
        omega,
        tau,
        algorithm: trace.algorithm,
        seed,
        epochs: last.epochs,
        time_units: last.time_units,
        wall_ms: last.wall_ms,
        converged: trace.stop_met,
    }
}

/// DQAM with `θ = 1/(2(ω−1))` against fully parallel PCDM in the metric
/// `B_i = A_iᵀA_i` (so `L_i = 1`), for every `ω` and replication.
pub fn run_stepsize(exp: &StepsizeExperiment, executor: &dyn BlockExecutor) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for &omega in &exp.omegas {
        let n = exp.n.max(omega);
        for rep in 0..exp.reps {
            let seed = exp.seed_base + rep as u64;
            let a = gen_block_angular(&BlockAngularSpec::desk(n, omega, seed))?;
            let plain = CompositeProblem::feasibility(a.clone(), 1.0)?;
            let metric = plain.rebased(BlockNorms::hessian_blocks(&a, 1.0)?)?;
            for (alg, p) in [(Algorithm::Dqam, &plain), (Algorithm::PcdmFull, &metric)] {
                let cfg = stop_config(alg, exp.max_iters).omega(omega).processors(n);
                let clock = WallClock::new();
                let t = run_with(p, &cfg, None, executor, &clock)?;
                rows.push(row("block-angular", omega, n, seed, &t));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct TimeUnitsExperiment {
    pub rows: usize,
    pub cols: usize,
    pub omegas: Vec<usize>,
    pub taus: Vec<usize>,
    pub reps: usize,
    pub seed_base: u64,
    pub max_iters: usize,
}

impl TimeUnitsExperiment {
    pub fn desk(omegas: Vec<usize>, taus: Vec<usize>, reps: usize) -> Self {
        Self {
            rows: 2000,
            cols: 1000,
            omegas,
            taus,
            reps,
            seed_base: 0,
            max_iters: 10_000_000,
        }
    }
}

/// DQAM, fully parallel PCDM and PCDM(τ) with `p = τ` processors.
///
/// DQAM and fully parallel PCDM are deterministic, so each runs once per
/// instance and its time units for `p = τ` are `iterations·⌈n/τ⌉`.
pub fn run_time_units(exp: &TimeUnitsExperiment, executor: &dyn BlockExecutor) -> Result<Vec<CompareRow>> {
    let n = exp.cols;
    if let Some(&tau) = exp.taus.iter().find(|&&t| t == 0 || t > n) {
        return Err(Error::InvalidParameter(format!("τ = {tau} must lie in 1..={n}")));
    }
    let mut rows = Vec::new();
    for &omega in &exp.omegas {
        for rep in 0..exp.reps {
            let seed = exp.seed_base + rep as u64;
            let spec = BoundedRowSpec {
                rows: exp.rows,
                cols: exp.cols,
                ..BoundedRowSpec::desk(omega, seed)
            };
            let a = gen_bounded_row(&spec)?;
            let p = CompositeProblem::feasibility(a, 1.0)?;
            for alg in [Algorithm::Dqam, Algorithm::PcdmFull] {
                let clock = WallClock::new();
                let t = run_with(&p, &stop_config(alg, exp.max_iters).omega(omega), None, executor, &clock)?;
                let iters = t.iterations() as u64;
                for &tau in &exp.taus {
                    let mut r = row("bounded-row", omega, tau, seed, &t);
                    r.time_units = iters * n.div_ceil(tau) as u64;
                    rows.push(r);
                }
            }
            for &tau in &exp.taus {
                let cfg = stop_config(Algorithm::Pcdm, exp.max_iters)
                    .omega(omega)
                    .tau(tau)
                    .processors(tau)
                    .seed(seed);
                let clock = WallClock::new();
                let t = run_with(&p, &cfg, None, executor, &clock)?;
                rows.push(row("bounded-row", omega, tau, seed, &t));
            }
        }
    }
    Ok(rows)
}

/// Mean of `f` over the rows matching `keep`.
pub fn mean_by(rows: &[CompareRow], keep: impl Fn(&CompareRow) -> bool, f: impl Fn(&CompareRow) -> f64) -> f64 {
    let sel: Vec<f64> = rows.iter().filter(|r| keep(r)).map(f).collect();
    if sel.is_empty() {
        f64::NAN
    } else {
        sel.iter().sum::<f64>() / sel.len() as f64
    }
}
