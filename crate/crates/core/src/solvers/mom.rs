//! The method of multipliers with a decomposition method as inner solver.

use alloc::vec::Vec;

use super::{run_with, BlockExecutor, NoClock, SerialExecutor, SolverConfig, StopRule};
use crate::blockstruct::BlockVector;
use crate::linalg;
use crate::problem::CompositeProblem;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MomRecord {
    pub k: usize,
    /// Multiplier after the update of outer iteration `k`.
    pub pi: Vec<f64>,
    pub z: BlockVector,
    /// `‖b − A z_k‖`.
    pub residual_norm: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomTrace {
    pub records: Vec<MomRecord>,
}

impl MomTrace {
    pub fn final_multiplier(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.pi.as_slice())
    }
}

/// Alternates an inner solve of the augmented Lagrangian subproblem for the
/// current multiplier (to the stationarity measure `inner_tol`, warm started
/// from the previous `z`) with `π ← π + r(b − Az)`.
///
/// `p` carries the starting multiplier. `z0` defaults to zero.
pub fn method_of_multipliers(
    p: &CompositeProblem,
    inner: &SolverConfig,
    outer_iters: usize,
    inner_tol: f64,
    z0: Option<&BlockVector>,
) -> Result<MomTrace> {
    method_of_multipliers_with_executor(p, inner, outer_iters, inner_tol, z0, &SerialExecutor)
}

/// [`method_of_multipliers`] with an explicit block executor.
pub fn method_of_multipliers_with_executor(
    p: &CompositeProblem,
    inner: &SolverConfig,
    outer_iters: usize,
    inner_tol: f64,
    z0: Option<&BlockVector>,
    executor: &dyn BlockExecutor,
) -> Result<MomTrace> {
    if !(inner_tol > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "inner tolerance {inner_tol} must be positive"
        )));
    }
    let mut cfg = inner.clone();
    cfg.stop = StopRule::Stationarity(inner_tol);
    let mut current = p.clone();
    let mut z = match z0 {
        Some(v) => v.clone(),
        None => BlockVector::zeros(p.partition().clone()),
    };
    let mut records = Vec::with_capacity(outer_iters);
    for k in 1..=outer_iters {
        let trace = run_with(&current, &cfg, Some(&z), executor, &NoClock)?;
        z = trace.x.clone();
        current = current.multiplier_update(&z)?;
        let rho = current.residual_raw(z.as_slice());
        records.push(MomRecord {
            k,
            pi: current.pi().to_vec(),
            z: z.clone(),
            residual_norm: linalg::norm2(&rho),
            inner_iterations: trace.iterations(),
            inner_converged: trace.stop_met,
        });
    }
    Ok(MomTrace { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstruct::{BlockMatrix, BlockPartition};
    use crate::problem::BlockPsi;
    use crate::solvers::Algorithm;
    use alloc::vec;

    #[test]
    fn two_variable_qp_multiplier() {
        // min ½‖x‖² s.t. x₁ + x₂ = 1: x* = (½, ½), π* = ½
        let part = BlockPartition::scalar(2).unwrap();
        let a = BlockMatrix::from_dense(1, part, &[1.0, 1.0], vec![1.0]).unwrap();
        let p = CompositeProblem::new(a, 1.0, vec![BlockPsi::quadratic(1, 1.0); 2]).unwrap();
        for alg in [Algorithm::Dqam, Algorithm::PcdmFull] {
            let cfg = SolverConfig::new(alg).max_iters(100_000);
            let t = method_of_multipliers(&p, &cfg, 40, 1e-12, None).unwrap();
            let pi = t.final_multiplier().unwrap()[0];
            assert!((pi - 0.5).abs() < 1e-6, "{alg}: π = {pi}");
            let z = &t.records.last().unwrap().z;
            assert!((z.as_slice()[0] - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn feasible_start_keeps_multiplier() {
        let part = BlockPartition::scalar(2).unwrap();
        let a = BlockMatrix::from_dense(1, part.clone(), &[1.0, 1.0], vec![1.0]).unwrap();
        let p = CompositeProblem::new(a, 1.0, vec![BlockPsi::Zero; 2]).unwrap();
        let z0 = BlockVector::new(part, vec![0.5, 0.5]).unwrap();
        let t = method_of_multipliers(&p, &SolverConfig::new(Algorithm::Dqam), 3, 1e-10, Some(&z0)).unwrap();
        for r in &t.records {
            assert_eq!(r.pi, vec![0.0]);
            assert_eq!(r.residual_norm, 0.0);
            assert_eq!(r.inner_iterations, 0);
        }
    }
}
