//! The decomposition methods and the iteration harness that drives them.
//!
//! Every method updates a set of blocks per iteration from a frozen iterate
//! `x_k`: DQAM and its variants update all blocks and average with a step
//! `θ`, PCDM updates a τ-nice random subset, fully parallel PCDM updates all
//! blocks with `β = ω`. [`run`] owns the iterate, the cached residual
//! `b − Ax` and the sampler; block subproblems go through a
//! [`BlockExecutor`], and updates are applied in ascending block order so
//! the result does not depend on how the subproblems were scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::blockstruct::{BlockVector, BlockView};
use crate::eso;
use crate::linalg::DenseMatrix;
use crate::math;
use crate::problem::CompositeProblem;
use crate::sampling::TauNiceSampler;
use crate::separability;
use crate::{Error, Result};

pub mod dqam;
mod model;
pub mod mom;
pub mod oracle;
pub mod pcdm;

pub use dqam::{dqam_fd_step, dqam_sqa_step, dqam_step, f_dqa};
pub use model::MAX_BLOCK_SIZE;
pub use mom::{method_of_multipliers, method_of_multipliers_with_executor, MomRecord, MomTrace};
pub use oracle::{QuadraticPenalty, SmoothOracle};
pub use pcdm::{pcdm_full_step, pcdm_step, FullParallelPcdm};

use model::{restricted_newton, BlockModel, Restricted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Algorithm {
    Dqam,
    DqamFd,
    DqamSqa,
    Pcdm,
    PcdmFull,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Dqam,
        Algorithm::DqamFd,
        Algorithm::DqamSqa,
        Algorithm::Pcdm,
        Algorithm::PcdmFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dqam => "dqam",
            Algorithm::DqamFd => "dqam-fd",
            Algorithm::DqamSqa => "dqam-sqa",
            Algorithm::Pcdm => "pcdm",
            Algorithm::PcdmFull => "pcdm-full",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    /// Everything except PCDM with τ < n is deterministic.
    pub fn is_deterministic(self) -> bool {
        self != Algorithm::Pcdm
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Curvature matrices `C_i` for DQAM-SQA.
#[derive(Debug, Clone, PartialEq)]
pub enum SqaCurvature {
    /// `C_i = L_i B_i`; with `θ = 1/ω` and `Ψ = 0` the method coincides with
    /// fully parallel PCDM.
    LipschitzMetric,
    /// `C_i = r A_iᵀA_i`, the exact Hessian block (plain DQAM).
    HessianBlock,
    Custom(Vec<DenseMatrix>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StopRule {
    /// `½‖b − Ax‖² ≤ ε·bᵀb`, i.e. `f(x) ≤ ε r bᵀb`.
    FRatio(f64),
    /// `F(x) − F* ≤ eps`.
    Gap { eps: f64, f_star: f64 },
    /// Stationarity measure of [`CompositeProblem::stationarity_norm`] `≤ tol`.
    Stationarity(f64),
    IterOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// DQAM family step; defaults to `1/(2(ω−1))`, or 1 when `ω = 1`.
    pub theta: Option<f64>,
    /// PCDM sampling size.
    pub tau: Option<usize>,
    pub beta_override: Option<f64>,
    /// Separability degree; computed from `A` when absent.
    pub omega: Option<usize>,
    pub sqa_curvature: SqaCurvature,
    pub seed: u64,
    pub max_iters: usize,
    pub stop: StopRule,
    /// Processor count `p` used for the time-unit accounting.
    pub processors: usize,
    /// Full residual recompute period.
    pub residual_refresh: usize,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            theta: None,
            tau: None,
            beta_override: None,
            omega: None,
            sqa_curvature: SqaCurvature::LipschitzMetric,
            seed: 0,
            max_iters: 1000,
            stop: StopRule::IterOnly,
            processors: 1,
            residual_refresh: 1000,
        }
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn tau(mut self, tau: usize) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta_override = Some(beta);
        self
    }

    pub fn omega(mut self, omega: usize) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn curvature(mut self, c: SqaCurvature) -> Self {
        self.sqa_curvature = c;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_iters(mut self, k: usize) -> Self {
        self.max_iters = k;
        self
    }

    pub fn stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn processors(mut self, p: usize) -> Self {
        self.processors = p;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub k: usize,
    pub big_f: f64,
    pub f: f64,
    /// `½‖b − Ax‖²/bᵀb`; NaN when `b = 0`.
    pub gap: f64,
    /// Blocks updated in this iteration.
    pub blocks: usize,
    /// Cumulative updated blocks divided by `n`.
    pub epochs: f64,
    /// Cumulative `⌈|S_k|/p⌉`.
    pub time_units: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub algorithm: Algorithm,
    pub records: Vec<IterationRecord>,
    pub x: BlockVector,
    /// Whether the stop rule was met (as opposed to running out of iterations).
    pub stop_met: bool,
    pub omega: usize,
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub tau: usize,
    pub warnings: Vec<String>,
}

impl IterationTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a trace always holds the initial point")
    }

    pub fn iterations(&self) -> usize {
        self.last().k
    }
}

/// Work function computing one block increment.
pub type BlockTask<'a> = dyn Fn(usize) -> Result<Vec<f64>> + Sync + 'a;

/// Evaluates block subproblems, possibly concurrently. Results must be
/// returned in the order of `blocks`.
pub trait BlockExecutor: Sync {
    fn map_blocks(&self, blocks: &[usize], task: &BlockTask<'_>) -> Vec<Result<Vec<f64>>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl BlockExecutor for SerialExecutor {
    fn map_blocks(&self, blocks: &[usize], task: &BlockTask<'_>) -> Vec<Result<Vec<f64>>> {
        blocks.iter().map(|&i| task(i)).collect()
    }
}

/// Monotone wall clock in milliseconds.
pub trait Stopwatch {
    fn now_ms(&self) -> f64;
}

/// Clock for environments without one; all wall times are 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Stopwatch for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

/// `1/(2(ω−1))` for `ω ≥ 2`, 1 for `ω = 1`.
pub fn default_theta(omega: usize) -> f64 {
    if omega >= 2 {
        1.0 / (2.0 * (omega - 1) as f64)
    } else {
        1.0
    }
}

pub(crate) enum UpdateRule {
    Models(Vec<BlockModel>),
    /// Newton on `h ↦ f(x + U_i h)`, with `r A_iᵀA_i` as the Hessian.
    Newton(Vec<DenseMatrix>),
}

/// Computes block increments for a fixed method and parameters.
pub(crate) struct Stepper<'p> {
    p: &'p CompositeProblem,
    rule: UpdateRule,
    /// Multiplies every increment (`θ` for the DQAM family, 1 for PCDM).
    scale: f64,
}

struct ResidualRestriction<'a> {
    view: BlockView<'a>,
    rho: &'a [f64],
    r: f64,
    hess: &'a DenseMatrix,
}

impl ResidualRestriction<'_> {
    fn shifted(&self, h: &[f64]) -> Vec<f64> {
        let mut w = self.rho.to_vec();
        self.view.mul_add(-1.0, h, &mut w);
        w
    }
}

impl Restricted for ResidualRestriction<'_> {
    fn value(&self, h: &[f64]) -> f64 {
        let w = self.shifted(h);
        0.5 * self.r * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, h: &[f64]) -> Vec<f64> {
        let w = self.shifted(h);
        self.view.tr_mul(&w).into_iter().map(|v| -self.r * v).collect()
    }

    fn hessian(&self, _h: &[f64]) -> DenseMatrix {
        self.hess.clone()
    }
}

impl<'p> Stepper<'p> {
    pub(crate) fn new(p: &'p CompositeProblem, rule: UpdateRule, scale: f64) -> Self {
        Self { p, rule, scale }
    }

    /// Models with `H_i = r A_iᵀA_i`.
    pub(crate) fn hessian_models(p: &CompositeProblem) -> Result<Vec<BlockModel>> {
        (0..p.num_blocks())
            .map(|i| {
                let h = p.matrix().block_unchecked(i).gram().scaled(p.r());
                BlockModel::new(h, p.psi(i), i)
            })
            .collect()
    }

    /// Models with `H_i = β w_i B_i`.
    pub(crate) fn eso_models(p: &CompositeProblem, beta: f64, w: &[f64]) -> Result<Vec<BlockModel>> {
        (0..p.num_blocks())
            .map(|i| {
                let d = beta * w[i];
                let metric = p.norms().metric(i);
                if metric.is_identity() {
                    BlockModel::scaled(d, i)
                } else {
                    let k = p.partition().size(i);
                    BlockModel::new(metric.to_dense(k).scaled(d), p.psi(i), i)
                }
            })
            .collect()
    }

    /// Models with user-supplied SPD `C_i`.
    pub(crate) fn custom_models(p: &CompositeProblem, c: &[DenseMatrix]) -> Result<Vec<BlockModel>> {
        if c.len() != p.num_blocks() {
            return Err(Error::DimensionMismatch {
                expected: p.num_blocks(),
                found: c.len(),
            });
        }
        c.iter()
            .enumerate()
            .map(|(i, ci)| {
                let k = p.partition().size(i);
                if ci.rows() != k || ci.cols() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        found: ci.rows(),
                    });
                }
                crate::blockstruct::SpdMatrix::new(ci.clone()).map_err(|_| {
                    Error::NotPositiveDefinite {
                        what: format!("curvature matrix C_{i}"),
                    }
                })?;
                BlockModel::new(ci.clone(), p.psi(i), i)
            })
            .collect()
    }

    pub(crate) fn newton_rule(p: &CompositeProblem) -> UpdateRule {
        UpdateRule::Newton(
            (0..p.num_blocks())
                .map(|i| p.matrix().block_unchecked(i).gram().scaled(p.r()))
                .collect(),
        )
    }

    /// Increment of block `i` at `x` with residual `rho = b − Ax`.
    pub(crate) fn increment(&self, i: usize, x: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
        let p = self.p;
        let xi = &x[p.partition().range(i)];
        let mut h = match &self.rule {
            UpdateRule::Models(models) => {
                let g = p.grad_block_from_residual(rho, i);
                models[i].minimize(p.psi(i), xi, &g, i)?
            }
            UpdateRule::Newton(hess) => {
                let fun = ResidualRestriction {
                    view: p.matrix().block_unchecked(i),
                    rho,
                    r: p.r(),
                    hess: &hess[i],
                };
                restricted_newton(&fun, p.psi(i), xi, i)?
            }
        };
        if self.scale != 1.0 {
            h.iter_mut().for_each(|v| *v *= self.scale);
        }
        Ok(h)
    }

    /// One step from `x` updating `blocks`, computed from scratch.
    pub(crate) fn step(&self, x: &BlockVector, blocks: &[usize]) -> Result<BlockVector> {
        let rho = self.p.residual_raw(x.as_slice());
        let incs = blocks
            .iter()
            .map(|&i| self.increment(i, x.as_slice(), &rho))
            .collect::<Result<Vec<_>>>()?;
        let mut next = x.clone();
        for (&i, h) in blocks.iter().zip(incs) {
            for (v, d) in next.block_mut(i).iter_mut().zip(h) {
                *v += d;
            }
        }
        Ok(next)
    }
}

/// Validated, sorted, duplicate-free block set.
pub(crate) fn check_block_set(s: &[usize], n: usize) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("empty block set".into()));
    }
    for w in s.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter(
                "block set must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&i) = s.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    Ok(())
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("θ = {theta} must lie in (0, 1]")));
    }
    Ok(())
}

/// Runs the configured method from `x₀ = 0` (projected onto any boxes) with
/// serial block evaluation and no wall clock.
pub fn run(p: &CompositeProblem, config: &SolverConfig) -> Result<IterationTrace> {
    run_with(p, config, None, &SerialExecutor, &NoClock)
}

/// [`run`] with an explicit start, executor and clock.
pub fn run_with(
    p: &CompositeProblem,
    config: &SolverConfig,
    x0: Option<&BlockVector>,
    executor: &dyn BlockExecutor,
    clock: &dyn Stopwatch,
) -> Result<IterationTrace> {
    let t0 = clock.now_ms();
    let n = p.num_blocks();
    let omega = match config.omega {
        Some(w) if w >= 1 && w <= n => w,
        Some(w) => {
            return Err(Error::InvalidParameter(format!(
                "ω = {w} must lie in 1..={n}"
            )))
        }
        None => separability::partial_separability_degree(p.matrix())?,
    };
    if config.processors == 0 {
        return Err(Error::InvalidParameter("processor count must be ≥ 1".into()));
    }
    if config.residual_refresh == 0 {
        return Err(Error::InvalidParameter("residual refresh period must be ≥ 1".into()));
    }
    let mut warnings = Vec::new();
    let mut theta = None;
    let mut beta = None;
    let mut tau = n;

    let resolve_theta = |warnings: &mut Vec<String>| -> Result<f64> {
        let t = config.theta.unwrap_or_else(|| default_theta(omega));
        check_theta(t)?;
        if omega >= 2 && t > default_theta(omega) * (1.0 + 1e-12) {
            warnings.push(format!(
                "θ = {t} exceeds 1/(2(ω−1)) = {}; the linear rate guarantee does not apply",
                default_theta(omega)
            ));
        }
        if omega == 1 {
            warnings.push("ω = 1: no rate guarantee is claimed for the DQAM family".into());
        }
        Ok(t)
    };

    let stepper = match config.algorithm {
        Algorithm::Dqam => {
            let t = resolve_theta(&mut warnings)?;
            theta = Some(t);
            Stepper::new(p, UpdateRule::Models(Stepper::hessian_models(p)?), t)
        }
        Algorithm::DqamFd => {
            let t = resolve_theta(&mut warnings)?;
            theta = Some(t);
            Stepper::new(p, Stepper::newton_rule(p), t)
        }
        Algorithm::DqamSqa => {
            let t = resolve_theta(&mut warnings)?;
            theta = Some(t);
            let models = match &config.sqa_curvature {
                SqaCurvature::LipschitzMetric => Stepper::eso_models(p, 1.0, p.lipschitz())?,
                SqaCurvature::HessianBlock => Stepper::hessian_models(p)?,
                SqaCurvature::Custom(c) => Stepper::custom_models(p, c)?,
            };
            Stepper::new(p, UpdateRule::Models(models), t)
        }
        Algorithm::Pcdm => {
            tau = config
                .tau
                .ok_or_else(|| Error::InvalidParameter("PCDM needs τ".into()))?;
            let b = match config.beta_override {
                Some(b) => b,
                None => eso::eso_beta(omega, tau, n)?,
            };
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("β = {b} must be positive")));
            }
            beta = Some(b);
            Stepper::new(p, UpdateRule::Models(Stepper::eso_models(p, b, p.lipschitz())?), 1.0)
        }
        Algorithm::PcdmFull => {
            let b = config.beta_override.unwrap_or(omega as f64);
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("β = {b} must be positive")));
            }
            beta = Some(b);
            Stepper::new(p, UpdateRule::Models(Stepper::eso_models(p, b, p.lipschitz())?), 1.0)
        }
    };
    let mut sampler = if config.algorithm == Algorithm::Pcdm {
        Some(TauNiceSampler::new(n, tau, config.seed)?)
    } else {
        None
    };

    let bb = crate::linalg::dot(p.rhs(), p.rhs());
    if matches!(config.stop, StopRule::FRatio(_)) && bb == 0.0 {
        return Err(Error::ZeroRhs);
    }

    let mut x = match x0 {
        Some(v) => {
            if v.partition() != p.partition() {
                return Err(Error::PartitionMismatch);
            }
            v.clone()
        }
        None => {
            let mut v = BlockVector::zeros(p.partition().clone());
            for i in 0..n {
                p.psi(i).project(v.block_mut(i));
            }
            v
        }
    };
    let mut rho = p.residual_raw(x.as_slice());
    let f_of = |rho: &[f64]| p.f_from_residual(rho);
    let gap_of = |rho: &[f64]| {
        if bb > 0.0 {
            0.5 * crate::linalg::dot(rho, rho) / bb
        } else {
            f64::NAN
        }
    };

    let f0 = f_of(&rho);
    let big_f0 = f0 + p.psi_raw(x.as_slice());
    if !big_f0.is_finite() {
        return Err(Error::NonFinite(format!("F(x₀) = {big_f0}")));
    }
    let mut records = vec![IterationRecord {
        k: 0,
        big_f: big_f0,
        f: f0,
        gap: gap_of(&rho),
        blocks: 0,
        epochs: 0.0,
        time_units: 0,
        wall_ms: clock.now_ms() - t0,
    }];
    let stop_met = |rec: &IterationRecord, x: &BlockVector| -> Result<bool> {
        Ok(match config.stop {
            StopRule::FRatio(eps) => rec.gap <= eps,
            StopRule::Gap { eps, f_star } => rec.big_f - f_star <= eps,
            StopRule::Stationarity(tol) => p.stationarity_norm(x)? <= tol,
            StopRule::IterOnly => false,
        })
    };
    let floor = 1e-15 * math::abs(big_f0).max(1.0);
    let all: Vec<usize> = (0..n).collect();
    let mut met = stop_met(&records[0], &x)?;
    let mut k = 0;
    let mut updated_blocks = 0usize;
    let mut time_units = 0u64;

    while !met && k < config.max_iters {
        k += 1;
        let drawn;
        let s: &[usize] = match sampler.as_mut() {
            Some(smp) => {
                drawn = smp.draw();
                &drawn
            }
            None => &all,
        };
        let results = {
            let xs = x.as_slice();
            let rs = rho.as_slice();
            let task = |i: usize| stepper.increment(i, xs, rs);
            executor.map_blocks(s, &task)
        };
        if results.len() != s.len() {
            return Err(Error::InvalidParameter(
                "executor returned the wrong number of results".into(),
            ));
        }
        for (&i, res) in s.iter().zip(results) {
            let h = res?;
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("increment of block {i} at iteration {k}")));
            }
            p.matrix().block_unchecked(i).mul_add(-1.0, &h, &mut rho);
            for (v, d) in x.block_mut(i).iter_mut().zip(&h) {
                *v += d;
            }
        }
        if k % config.residual_refresh == 0 {
            rho = p.residual_raw(x.as_slice());
        }
        let f = f_of(&rho);
        let big_f = f + p.psi_raw(x.as_slice());
        let prev = records.last().unwrap().big_f;
        if config.algorithm.is_deterministic()
            && big_f > prev + (1e-6 * math::abs(prev)).max(floor)
        {
            return Err(Error::Divergence {
                iteration: k,
                previous: prev,
                current: big_f,
            });
        }
        updated_blocks += s.len();
        time_units += s.len().div_ceil(config.processors) as u64;
        let rec = IterationRecord {
            k,
            big_f,
            f,
            gap: gap_of(&rho),
            blocks: s.len(),
            epochs: updated_blocks as f64 / n as f64,
            time_units,
            wall_ms: clock.now_ms() - t0,
        };
        met = stop_met(&rec, &x)?;
        records.push(rec);
    }

    Ok(IterationTrace {
        algorithm: config.algorithm,
        records,
        x,
        stop_met: met,
        omega,
        theta,
        beta,
        tau,
        warnings,
    })
}
