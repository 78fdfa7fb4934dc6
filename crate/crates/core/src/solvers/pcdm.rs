//! Parallel coordinate descent: the τ-nice variant and the fully parallel
//! one with `β = ω`, `w = L`.

use alloc::vec::Vec;

use super::{check_block_set, Stepper, UpdateRule};
use crate::blockstruct::BlockVector;
use crate::eso::EsoParams;
use crate::problem::CompositeProblem;
use crate::{Error, Result};

/// One PCDM step updating the blocks in `s` (sorted, distinct):
/// `h^(i) = argmin ⟨g^(i), h⟩ + (βw_i/2)⟨B_i h, h⟩ + Ψ_i(x^(i) + h)`.
/// Blocks outside `s` are returned bit-identical.
pub fn pcdm_step(
    p: &CompositeProblem,
    x: &BlockVector,
    params: &EsoParams,
    s: &[usize],
) -> Result<BlockVector> {
    let n = p.num_blocks();
    if x.partition() != p.partition() {
        return Err(Error::PartitionMismatch);
    }
    if params.w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: params.w.len(),
        });
    }
    check_block_set(s, n)?;
    let models = Stepper::eso_models(p, params.beta, &params.w)?;
    Stepper::new(p, UpdateRule::Models(models), 1.0).step(x, s)
}

/// One fully parallel PCDM step (`β = ω`, `w = L`, all blocks).
pub fn pcdm_full_step(p: &CompositeProblem, x: &BlockVector, omega: usize) -> Result<BlockVector> {
    if omega == 0 {
        return Err(Error::InvalidParameter("ω must be ≥ 1".into()));
    }
    FullParallelPcdm::new(p, omega as f64)?.step(x)
}

/// Fully parallel PCDM with the block models built once.
pub struct FullParallelPcdm<'p> {
    stepper: Stepper<'p>,
    all: Vec<usize>,
}

impl<'p> FullParallelPcdm<'p> {
    /// `beta` is normally `ω`.
    pub fn new(p: &'p CompositeProblem, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("β = {beta} must be positive")));
        }
        let models = Stepper::eso_models(p, beta, p.lipschitz())?;
        Ok(Self {
            stepper: Stepper::new(p, UpdateRule::Models(models), 1.0),
            all: (0..p.num_blocks()).collect(),
        })
    }

    pub fn step(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.partition() != self.stepper.p.partition() {
            return Err(Error::PartitionMismatch);
        }
        self.stepper.step(x, &self.all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstruct::{BlockMatrix, BlockPartition};
    use crate::eso::eso_params;
    use crate::problem::BlockPsi;
    use alloc::vec;

    fn toy() -> CompositeProblem {
        let part = BlockPartition::scalar(3).unwrap();
        let a = BlockMatrix::from_dense(
            2,
            part,
            &[1.0, 2.0, 0.0, 0.0, -1.0, 3.0],
            vec![1.0, -2.0],
        )
        .unwrap();
        CompositeProblem::new(a, 1.0, vec![BlockPsi::Zero; 3]).unwrap()
    }

    #[test]
    fn single_block_closed_form() {
        let p = toy();
        let x = BlockVector::new(p.partition().clone(), vec![0.1, 0.2, 0.3]).unwrap();
        let params = eso_params(2, 2, 3, p.lipschitz()).unwrap();
        let next = pcdm_step(&p, &x, &params, &[1]).unwrap();
        let g = p.grad_f(&x).unwrap();
        let expect = 0.2 - g.as_slice()[1] / (params.beta * p.lipschitz()[1]);
        assert!((next.as_slice()[1] - expect).abs() < 1e-15);
        assert_eq!(next.as_slice()[0].to_bits(), 0.1f64.to_bits());
        assert_eq!(next.as_slice()[2].to_bits(), 0.3f64.to_bits());
    }

    #[test]
    fn full_sampling_matches_full_step() {
        let p = toy();
        let x = BlockVector::new(p.partition().clone(), vec![0.1, 0.2, 0.3]).unwrap();
        let params = eso_params(2, 3, 3, p.lipschitz()).unwrap();
        let a = pcdm_step(&p, &x, &params, &[0, 1, 2]).unwrap();
        let b = pcdm_full_step(&p, &x, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_sets_rejected() {
        let p = toy();
        let x = BlockVector::zeros(p.partition().clone());
        let params = eso_params(2, 2, 3, p.lipschitz()).unwrap();
        assert!(pcdm_step(&p, &x, &params, &[]).is_err());
        assert!(pcdm_step(&p, &x, &params, &[2, 1]).is_err());
        assert!(pcdm_step(&p, &x, &params, &[3]).is_err());
    }
}
