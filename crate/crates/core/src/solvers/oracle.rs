//! Smooth convex oracles for the generalized DQAM variants.

use alloc::vec::Vec;

use crate::blockstruct::{BlockMatrix, BlockPartition};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::problem::CompositeProblem;

/// A smooth convex `f` given by value and gradient over a block partition.
pub trait SmoothOracle: Sync {
    fn partition(&self) -> &BlockPartition;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `U_iᵀ f''(x) U_i`. The default differentiates the gradient by central
    /// differences and symmetrizes the result.
    fn block_hessian(&self, x: &[f64], i: usize) -> DenseMatrix {
        let range = self.partition().range(i);
        let k = range.len();
        let mut m = DenseMatrix::zeros(k, k);
        let mut xp = x.to_vec();
        for (col, j) in range.clone().enumerate() {
            let step = 1e-5 * math::abs(x[j]).max(1.0);
            xp[j] = x[j] + step;
            let gp = self.gradient(&xp);
            xp[j] = x[j] - step;
            let gm = self.gradient(&xp);
            xp[j] = x[j];
            for (row, jj) in range.clone().enumerate() {
                m[(row, col)] = (gp[jj] - gm[jj]) / (2.0 * step);
            }
        }
        for a in 0..k {
            for b in 0..a {
                let s = 0.5 * (m[(a, b)] + m[(b, a)]);
                m[(a, b)] = s;
                m[(b, a)] = s;
            }
        }
        m
    }
}

/// `f(x) = (r/2)‖b − Ax‖²` as an oracle, with exact Hessian blocks.
#[derive(Debug, Clone)]
pub struct QuadraticPenalty {
    a: BlockMatrix,
    r: f64,
}

impl QuadraticPenalty {
    pub fn new(a: BlockMatrix, r: f64) -> Self {
        Self { a, r }
    }

    pub fn from_problem(p: &CompositeProblem) -> Self {
        Self::new(p.matrix().clone(), p.r())
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        self.a.rhs().iter().zip(&ax).map(|(b, v)| b - v).collect()
    }
}

impl SmoothOracle for QuadraticPenalty {
    fn partition(&self) -> &BlockPartition {
        self.a.partition()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let rho = self.residual(x);
        0.5 * self.r * rho.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let rho = self.residual(x);
        self.a.tr_mul_vec(&rho).into_iter().map(|v| -self.r * v).collect()
    }

    fn block_hessian(&self, _x: &[f64], i: usize) -> DenseMatrix {
        self.a.block_unchecked(i).gram().scaled(self.r)
    }
}
