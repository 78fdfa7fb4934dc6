//! Expected separable overapproximation parameters for the quadratic
//! penalty under τ-nice sampling, and exhaustive checks of the ESO
//! inequality and of the expectation identity for separable `Ψ`.

use alloc::format;
use alloc::vec::Vec;

use crate::blockstruct::BlockVector;
use crate::linalg;
use crate::math;
use crate::problem::CompositeProblem;
use crate::sampling::{binomial, for_each_subset};
use crate::{Error, Result};

/// Largest number of blocks the exhaustive checks accept.
pub const ENUMERATION_MAX_BLOCKS: usize = 12;
/// Largest number of τ-subsets the exhaustive checks accept.
pub const ENUMERATION_BUDGET: u128 = 100_000;

/// `(β, w)` such that `f` admits a `(β, w)`-ESO for τ-nice sampling.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EsoParams {
    pub beta: f64,
    pub w: Vec<f64>,
    pub tau: usize,
    pub omega: usize,
    pub n: usize,
}

/// `β = 1 + (ω − 1)(τ − 1)/max(1, n − 1)`.
pub fn eso_beta(omega: usize, tau: usize, n: usize) -> Result<f64> {
    if n == 0 || omega == 0 || omega > n || tau == 0 || tau > n {
        return Err(Error::InvalidParameter(format!(
            "ESO needs 1 ≤ ω ≤ n and 1 ≤ τ ≤ n, got ω = {omega}, τ = {tau}, n = {n}"
        )));
    }
    let denom = (n - 1).max(1) as f64;
    Ok(1.0 + ((omega - 1) * (tau - 1)) as f64 / denom)
}

/// ESO parameters with `w = L`.
pub fn eso_params(omega: usize, tau: usize, n: usize, lipschitz: &[f64]) -> Result<EsoParams> {
    let beta = eso_beta(omega, tau, n)?;
    if lipschitz.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: lipschitz.len(),
        });
    }
    if let Some(i) = lipschitz.iter().position(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "L_{i} = {} must be positive",
            lipschitz[i]
        )));
    }
    Ok(EsoParams {
        beta,
        w: lipschitz.to_vec(),
        tau,
        omega,
        n,
    })
}

/// Outcome of an exhaustive check: both sides and whether the claim holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `true` when both sides are `+∞` (an infeasible point for a box `Ψ`).
    pub vacuous: bool,
}

fn check_budget(n: usize, tau: usize) -> Result<()> {
    let subsets = binomial(n, tau);
    if n > ENUMERATION_MAX_BLOCKS || subsets > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget {
            subsets,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

fn check_vectors(p: &CompositeProblem, x: &BlockVector, h: &BlockVector) -> Result<()> {
    for v in [x, h] {
        if v.partition() != p.partition() {
            return Err(Error::PartitionMismatch);
        }
    }
    Ok(())
}

/// Checks `E[f(x + h_[Ŝ])] ≤ f(x) + (τ/n)(⟨f'(x), h⟩ + (β/2)‖h‖²_w)` by
/// averaging over all τ-subsets, up to `1e-10·max(1, |f(x)|)`.
///
/// The norm uses the problem's block metrics `B_i` and `params.w`.
pub fn verify_eso_exhaustive(
    p: &CompositeProblem,
    params: &EsoParams,
    x: &BlockVector,
    h: &BlockVector,
) -> Result<EnumerationCheck> {
    let n = p.num_blocks();
    if params.n != n || params.w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: params.w.len(),
        });
    }
    check_vectors(p, x, h)?;
    check_budget(n, params.tau)?;

    let rho = p.residual_raw(x.as_slice());
    let fx = p.f_from_residual(&rho);
    // A_i h^(i) per block
    let ah: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut out = alloc::vec![0.0; rho.len()];
            p.matrix().block_unchecked(i).mul_add(1.0, h.block(i), &mut out);
            out
        })
        .collect();

    let mut total = 0.0;
    let mut count = 0u64;
    let mut work = rho.clone();
    for_each_subset(n, params.tau, |s| {
        work.copy_from_slice(&rho);
        for &i in s {
            for (w, a) in work.iter_mut().zip(&ah[i]) {
                *w -= a;
            }
        }
        total += p.f_from_residual(&work);
        count += 1;
    });
    let lhs = total / count as f64;

    let g = p.grad_f(x)?;
    let norms = p.norms().clone().with_weights(params.w.clone())?;
    let frac = params.tau as f64 / n as f64;
    let rhs = fx
        + frac * (linalg::dot(g.as_slice(), h.as_slice())
            + 0.5 * params.beta * norms.weighted_norm_sq(h.as_slice()));
    let tol = 1e-10 * math::abs(fx).max(1.0);
    Ok(EnumerationCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
        vacuous: false,
    })
}

/// Checks `E[Ψ(x + h_[Ŝ])] = (1 − τ/n)Ψ(x) + (τ/n)Ψ(x + h)` by enumeration,
/// to `1e-12` relative. Infeasible `x` or `x + h` makes both sides `+∞`
/// and is reported as a vacuous pass.
pub fn verify_psi_identity(
    p: &CompositeProblem,
    tau: usize,
    x: &BlockVector,
    h: &BlockVector,
) -> Result<EnumerationCheck> {
    let n = p.num_blocks();
    if tau == 0 || tau > n {
        return Err(Error::InvalidParameter(format!(
            "τ = {tau} must lie in 1..={n}"
        )));
    }
    check_vectors(p, x, h)?;
    check_budget(n, tau)?;

    let part = p.partition();
    let xh: Vec<f64> = x.as_slice().iter().zip(h.as_slice()).map(|(a, b)| a + b).collect();
    let at_x: Vec<f64> = (0..n).map(|i| p.psi(i).value(x.block(i))).collect();
    let at_xh: Vec<f64> = (0..n).map(|i| p.psi(i).value(&xh[part.range(i)])).collect();
    let psi_x: f64 = at_x.iter().sum();
    let psi_xh: f64 = at_xh.iter().sum();
    if !psi_x.is_finite() || !psi_xh.is_finite() {
        return Ok(EnumerationCheck {
            lhs: f64::INFINITY,
            rhs: f64::INFINITY,
            holds: true,
            vacuous: true,
        });
    }

    let mut in_s = alloc::vec![false; n];
    let mut total = 0.0;
    let mut count = 0u64;
    for_each_subset(n, tau, |s| {
        in_s.iter_mut().for_each(|b| *b = false);
        for &i in s {
            in_s[i] = true;
        }
        total += (0..n)
            .map(|i| if in_s[i] { at_xh[i] } else { at_x[i] })
            .sum::<f64>();
        count += 1;
    });
    let lhs = total / count as f64;
    let frac = tau as f64 / n as f64;
    let rhs = (1.0 - frac) * psi_x + frac * psi_xh;
    let scale = math::abs(rhs).max(math::abs(psi_x)).max(math::abs(psi_xh)).max(1.0);
    Ok(EnumerationCheck {
        lhs,
        rhs,
        holds: math::abs(lhs - rhs) <= 1e-12 * scale,
        vacuous: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstruct::{BlockMatrix, BlockPartition};
    use crate::problem::BlockPsi;
    use alloc::vec;

    #[test]
    fn beta_examples() {
        assert_eq!(eso_beta(4, 1, 9).unwrap(), 1.0);
        assert_eq!(eso_beta(4, 9, 9).unwrap(), 4.0);
        assert_eq!(eso_beta(3, 2, 5).unwrap(), 1.5);
        assert_eq!(eso_beta(1, 1, 1).unwrap(), 1.0);
        assert!(eso_beta(6, 2, 5).is_err());
        assert!(eso_beta(2, 0, 5).is_err());
        assert!(eso_params(2, 2, 3, &[1.0, 0.0, 1.0]).is_err());
    }

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
    fn zero_direction_is_tight() {
        let p = toy();
        let x = BlockVector::new(p.partition().clone(), vec![0.3, -0.2, 0.7]).unwrap();
        let h = BlockVector::zeros(p.partition().clone());
        let params = eso_params(2, 2, 3, p.lipschitz()).unwrap();
        let c = verify_eso_exhaustive(&p, &params, &x, &h).unwrap();
        assert!(c.holds);
        assert!((c.lhs - c.rhs).abs() < 1e-14);
    }

    #[test]
    fn eso_holds_for_every_tau() {
        let p = toy();
        let x = BlockVector::new(p.partition().clone(), vec![0.3, -0.2, 0.7]).unwrap();
        let h = BlockVector::new(p.partition().clone(), vec![1.0, 2.0, -3.0]).unwrap();
        for tau in 1..=3 {
            let params = eso_params(2, tau, 3, p.lipschitz()).unwrap();
            assert!(verify_eso_exhaustive(&p, &params, &x, &h).unwrap().holds, "τ = {tau}");
        }
    }

    #[test]
    fn underestimated_beta_can_fail() {
        let p = toy();
        let x = BlockVector::zeros(p.partition().clone());
        // h aligned with both blocks of the first row
        let h = BlockVector::new(p.partition().clone(), vec![1.0, 0.5, 0.0]).unwrap();
        let mut params = eso_params(2, 3, 3, p.lipschitz()).unwrap();
        params.beta = 0.5;
        assert!(!verify_eso_exhaustive(&p, &params, &x, &h).unwrap().holds);
    }

    #[test]
    fn budget_enforced() {
        let part = BlockPartition::scalar(13).unwrap();
        let a = BlockMatrix::from_dense(1, part, &[1.0; 13], vec![1.0]).unwrap();
        let p = CompositeProblem::new(a, 1.0, vec![BlockPsi::Zero; 13]).unwrap();
        let x = BlockVector::zeros(p.partition().clone());
        let params = eso_params(13, 2, 13, p.lipschitz()).unwrap();
        assert!(matches!(
            verify_eso_exhaustive(&p, &params, &x, &x),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn psi_identity_cases() {
        let part = BlockPartition::scalar(3).unwrap();
        let a = BlockMatrix::from_dense(1, part.clone(), &[1.0, 1.0, 1.0], vec![1.0]).unwrap();
        let psi = vec![
            BlockPsi::LinearQuadratic { c: vec![0.5], mu: 2.0 },
            BlockPsi::boxed(vec![1.0], vec![-1.0], vec![1.0]),
            BlockPsi::Zero,
        ];
        let p = CompositeProblem::new(a, 1.0, psi).unwrap();
        let x = BlockVector::new(part.clone(), vec![0.2, 0.1, 4.0]).unwrap();
        let h = BlockVector::new(part.clone(), vec![-0.7, 0.5, 1.0]).unwrap();
        for tau in 1..=3 {
            let c = verify_psi_identity(&p, tau, &x, &h).unwrap();
            assert!(c.holds && !c.vacuous);
        }
        let far = BlockVector::new(part, vec![0.0, 3.0, 0.0]).unwrap();
        let c = verify_psi_identity(&p, 2, &x, &far).unwrap();
        assert!(c.holds && c.vacuous);
    }
}
