//! The diagonal quadratic approximation method and its two generalizations.
//!
//! All three compute a per-block increment `h^(i)` from the frozen iterate
//! and return `x + θh`.

use alloc::vec::Vec;

use super::model::{restricted_newton, BlockModel, Restricted};
use super::oracle::SmoothOracle;
use super::{check_theta, Stepper, UpdateRule};
use crate::blockstruct::{BlockPartition, BlockVector, SpdMatrix};
use crate::linalg::DenseMatrix;
use crate::problem::{BlockPsi, CompositeProblem};
use crate::{Error, Result};

/// One DQAM step: per block
/// `h^(i) = argmin ⟨g^(i), h⟩ + (r/2)‖A_i h‖² + Ψ_i(x^(i) + h)`, then
/// `x + θh`.
pub fn dqam_step(p: &CompositeProblem, x: &BlockVector, theta: f64) -> Result<BlockVector> {
    check_theta(theta)?;
    if x.partition() != p.partition() {
        return Err(Error::PartitionMismatch);
    }
    let stepper = Stepper::new(p, UpdateRule::Models(Stepper::hessian_models(p)?), theta);
    let all: Vec<usize> = (0..p.num_blocks()).collect();
    stepper.step(x, &all)
}

/// `f^DQA(x + h) = f(x) + ⟨f'(x), h⟩ + (r/2)Σ_i‖A_i h^(i)‖²`.
pub fn f_dqa(p: &CompositeProblem, x: &BlockVector, h: &BlockVector) -> Result<f64> {
    if x.partition() != p.partition() || h.partition() != p.partition() {
        return Err(Error::PartitionMismatch);
    }
    let g = p.grad_f(x)?;
    let mut diag = 0.0;
    for i in 0..p.num_blocks() {
        let ah = p.matrix().block(i)?.mul(h.block(i));
        diag += crate::linalg::dot(&ah, &ah);
    }
    Ok(p.eval_f(x)? + crate::linalg::dot(g.as_slice(), h.as_slice()) + 0.5 * p.r() * diag)
}

fn check_inputs(partition: &BlockPartition, psi: &[BlockPsi], x: &BlockVector) -> Result<()> {
    if x.partition() != partition {
        return Err(Error::PartitionMismatch);
    }
    if psi.len() != partition.num_blocks() {
        return Err(Error::DimensionMismatch {
            expected: partition.num_blocks(),
            found: psi.len(),
        });
    }
    for (i, ps) in psi.iter().enumerate() {
        ps.validate(partition.size(i))?;
    }
    Ok(())
}

struct OracleRestriction<'a> {
    oracle: &'a dyn SmoothOracle,
    x: &'a [f64],
    block: usize,
}

impl OracleRestriction<'_> {
    fn point(&self, h: &[f64]) -> Vec<f64> {
        let mut y = self.x.to_vec();
        let r = self.oracle.partition().range(self.block);
        for (v, d) in y[r].iter_mut().zip(h) {
            *v += d;
        }
        y
    }
}

impl Restricted for OracleRestriction<'_> {
    fn value(&self, h: &[f64]) -> f64 {
        self.oracle.value(&self.point(h))
    }

    fn gradient(&self, h: &[f64]) -> Vec<f64> {
        let r = self.oracle.partition().range(self.block);
        self.oracle.gradient(&self.point(h))[r].to_vec()
    }

    fn hessian(&self, h: &[f64]) -> DenseMatrix {
        self.oracle.block_hessian(&self.point(h), self.block)
    }
}

/// One DQAM-FD step: per block, minimizes `f(x + U_i h) + Ψ_i(x^(i) + h)`
/// exactly (backtracking proximal Newton on the restricted function), then
/// returns `x + θh`.
pub fn dqam_fd_step(
    oracle: &dyn SmoothOracle,
    psi: &[BlockPsi],
    x: &BlockVector,
    theta: f64,
) -> Result<BlockVector> {
    check_theta(theta)?;
    check_inputs(oracle.partition(), psi, x)?;
    let fx = oracle.value(x.as_slice());
    if !fx.is_finite() {
        return Err(Error::NonFinite(alloc::format!("f(x) = {fx}")));
    }
    let mut next = x.clone();
    for (i, ps) in psi.iter().enumerate() {
        let fun = OracleRestriction {
            oracle,
            x: x.as_slice(),
            block: i,
        };
        let h = restricted_newton(&fun, ps, x.block(i), i)?;
        for (v, d) in next.block_mut(i).iter_mut().zip(h) {
            *v += theta * d;
        }
    }
    Ok(next)
}

/// One DQAM-SQA step with curvature matrices `C_i`: per block
/// `h^(i) = argmin ⟨g^(i), h⟩ + ½⟨C_i h, h⟩ + Ψ_i(x^(i) + h)`, then `x + θh`.
pub fn dqam_sqa_step(
    oracle: &dyn SmoothOracle,
    psi: &[BlockPsi],
    x: &BlockVector,
    theta: f64,
    c: &[DenseMatrix],
) -> Result<BlockVector> {
    check_theta(theta)?;
    let partition = oracle.partition();
    check_inputs(partition, psi, x)?;
    if c.len() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            found: c.len(),
        });
    }
    let g = oracle.gradient(x.as_slice());
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    let mut next = x.clone();
    for (i, ps) in psi.iter().enumerate() {
        let k = partition.size(i);
        if c[i].rows() != k || c[i].cols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: c[i].rows(),
            });
        }
        SpdMatrix::new(c[i].clone()).map_err(|_| Error::NotPositiveDefinite {
            what: alloc::format!("curvature matrix C_{i}"),
        })?;
        let model = BlockModel::new(c[i].clone(), ps, i)?;
        let h = model.minimize(ps, x.block(i), &g[partition.range(i)], i)?;
        for (v, d) in next.block_mut(i).iter_mut().zip(h) {
            *v += theta * d;
        }
    }
    Ok(next)
}
