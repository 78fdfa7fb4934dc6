// Per-block model minimizers shared by the DQAM and PCDM steps.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{self, Cholesky, DenseMatrix};
use crate::math;
use crate::problem::BlockPsi;
use crate::{Error, Result};

/// Largest block handled by the dense per-block solves.
pub const MAX_BLOCK_SIZE: usize = 512;

/// Quadratic term of a per-block model `⟨g, h⟩ + ½⟨H h, h⟩ + Ψ_i(x + h)`.
#[derive(Debug, Clone)]
pub(crate) enum BlockModel {
    /// `H = d·I`.
    Scaled(f64),
    /// General SPD `H`; `chol` factors `H + μ_i I` for non-box `Ψ_i`.
    Dense { h: DenseMatrix, chol: Option<Cholesky> },
}

impl BlockModel {
    pub(crate) fn new(h: DenseMatrix, psi: &BlockPsi, block: usize) -> Result<Self> {
        let k = h.rows();
        if k > MAX_BLOCK_SIZE {
            return Err(Error::InvalidParameter(format!(
                "block {block} has {k} columns; dense block solves are capped at {MAX_BLOCK_SIZE}"
            )));
        }
        if k == 1 {
            let d = h[(0, 0)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularBlockSystem { block });
            }
            return Ok(BlockModel::Scaled(d));
        }
        let chol = if psi.is_box() {
            // only definiteness is needed here; the box solve uses `h` itself
            Cholesky::factor(&h, 1e-13).map_err(|_| Error::SingularBlockSystem { block })?;
            None
        } else {
            let mut m = h.clone();
            m.add_diagonal(psi.mu());
            Some(Cholesky::factor(&m, 1e-13).map_err(|_| Error::SingularBlockSystem { block })?)
        };
        Ok(BlockModel::Dense { h, chol })
    }

    pub(crate) fn scaled(d: f64, block: usize) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularBlockSystem { block });
        }
        Ok(BlockModel::Scaled(d))
    }

    /// `argmin_h ⟨g, h⟩ + ½⟨H h, h⟩ + Ψ_i(x + h)`.
    pub(crate) fn minimize(&self, psi: &BlockPsi, x: &[f64], g: &[f64], block: usize) -> Result<Vec<f64>> {
        match self {
            BlockModel::Scaled(d) => Ok(match psi {
                BlockPsi::Zero => g.iter().map(|v| -v / d).collect(),
                BlockPsi::LinearQuadratic { c, mu } => (0..x.len())
                    .map(|j| -(g[j] + c[j] + mu * x[j]) / (d + mu))
                    .collect(),
                BlockPsi::LinearBox { c, lo, hi } => (0..x.len())
                    .map(|j| (x[j] - (g[j] + c[j]) / d).max(lo[j]).min(hi[j]) - x[j])
                    .collect(),
            }),
            BlockModel::Dense { h, chol } => match (psi, chol) {
                (BlockPsi::LinearBox { .. }, _) | (_, None) => {
                    psi.solve_quadratic_model(x, g, h, None, block)
                }
                (_, Some(ch)) => {
                    let (c, mu) = match psi {
                        BlockPsi::LinearQuadratic { c, mu } => (Some(c), *mu),
                        _ => (None, 0.0),
                    };
                    let rhs: Vec<f64> = (0..x.len())
                        .map(|j| -(g[j] + c.map_or(0.0, |c| c[j]) + mu * x[j]))
                        .collect();
                    Ok(ch.solve(&rhs))
                }
            },
        }
    }
}

/// A smooth convex function of one block increment `h`.
pub(crate) trait Restricted {
    fn value(&self, h: &[f64]) -> f64;
    fn gradient(&self, h: &[f64]) -> Vec<f64>;
    fn hessian(&self, h: &[f64]) -> DenseMatrix;
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITERS: usize = 100;
const ARMIJO: f64 = 1e-4;

fn require_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} = {v}")))
    }
}

/// Minimizes `φ(h) + Ψ_i(x + h)` by proximal Newton steps with Armijo
/// backtracking, until the (projected) gradient norm is at most 1e-10 or
/// no further decrease is possible.
pub(crate) fn restricted_newton(
    fun: &dyn Restricted,
    psi: &BlockPsi,
    x: &[f64],
    block: usize,
) -> Result<Vec<f64>> {
    let k = x.len();
    let mut h = alloc::vec![0.0; k];
    if psi.is_box() {
        let mut u = x.to_vec();
        psi.project(&mut u);
        for j in 0..k {
            h[j] = u[j] - x[j];
        }
    }
    let objective = |h: &[f64]| -> Result<f64> {
        let u: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        Ok(require_finite(fun.value(h), "restricted f")? + psi.value(&u))
    };
    let mut phi = objective(&h)?;
    for _ in 0..NEWTON_MAX_ITERS {
        let g = fun.gradient(&h);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient on block {block}")));
        }
        let u: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
        let gs = psi.smooth_gradient(&u);
        let full: Vec<f64> = g.iter().zip(&gs).map(|(a, b)| a + b).collect();
        let stat = if psi.is_box() {
            let mut v: Vec<f64> = u.iter().zip(&full).map(|(a, b)| a - b).collect();
            psi.project(&mut v);
            math::sqrt(u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum())
        } else {
            linalg::norm2(&full)
        };
        if stat <= NEWTON_TOL {
            break;
        }
        let hess = fun.hessian(&h);
        let d = psi.solve_quadratic_model(&u, &g, &hess, None, block)?;
        let ud: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
        let predicted = linalg::dot(&g, &d) + psi.value(&ud) - psi.value(&u);
        if !(predicted < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = h.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let phi_t = objective(&trial)?;
            if phi_t <= phi + ARMIJO * t * predicted {
                h = trial;
                phi = phi_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(h)
}
