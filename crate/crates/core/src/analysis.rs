//! Linear rates, iteration bounds and the processor-count model.
//!
//! The formulas take strong convexity constants as explicit inputs; callers
//! decide the weights (`w = L` for PCDM, `w = e` for DQAM) and compute the
//! constants with [`CompositeProblem::strong_convexity_constants`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::blockstruct::BlockVector;
use crate::eso::{eso_beta, EsoParams};
use crate::linalg;
use crate::math;
use crate::problem::{CompositeProblem, ReferenceOptimum, StrongConvexityInfo};
use crate::solvers::{Stepper, UpdateRule};
use crate::{Error, Result};

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

fn finite_positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be positive")))
    }
}

/// `q = 1 − μ_F(L)/(ω + μ_F(L) − μ_f(L))`.
pub fn q_pcdm(mu_big_f: f64, mu_f: f64, omega: f64) -> Result<f64> {
    if !(mu_big_f > 0.0) {
        return Err(Error::NotStronglyConvex(mu_big_f));
    }
    if !(mu_f >= 0.0 && mu_f <= mu_big_f * (1.0 + 1e-12)) {
        return Err(invalid(format!("need 0 ≤ μ_f ≤ μ_F, got μ_f = {mu_f}, μ_F = {mu_big_f}")));
    }
    if !(omega >= 1.0) {
        return Err(invalid(format!("ω = {omega} must be ≥ 1")));
    }
    Ok(1.0 - mu_big_f / (omega + mu_big_f - mu_f))
}

/// `q = 1 − μ_F(e)/(16L′(ω−1)³ + 4(ω−1)μ_F(e))`, defined for `ω ≥ 2`.
pub fn q_dqam(mu_big_f_e: f64, l_prime: f64, omega: f64) -> Result<f64> {
    if !(omega >= 2.0) {
        return Err(invalid(format!("the DQAM rate needs ω ≥ 2, got {omega}")));
    }
    if !(mu_big_f_e > 0.0) {
        return Err(Error::NotStronglyConvex(mu_big_f_e));
    }
    finite_positive(l_prime, "L′")?;
    let w1 = omega - 1.0;
    Ok(1.0 - mu_big_f_e / (16.0 * l_prime * w1 * w1 * w1 + 4.0 * w1 * mu_big_f_e))
}

/// `K = ⌈(n/E|S|)·((β + μ_F − μ_f)/μ_F)·log(gap0/(ερ))⌉`: after `K`
/// iterations `F(x_K) − F* ≤ ε` with probability at least `1 − ρ`.
#[allow(clippy::too_many_arguments)]
pub fn k_bound(
    n: usize,
    expected_size: f64,
    beta: f64,
    mu_big_f: f64,
    mu_f: f64,
    gap0: f64,
    eps: f64,
    rho: f64,
) -> Result<u64> {
    if n == 0 || !(expected_size > 0.0) || expected_size > n as f64 {
        return Err(invalid(format!("need 0 < E|S| ≤ n, got {expected_size} with n = {n}")));
    }
    if !(mu_big_f > 0.0) {
        return Err(Error::NotStronglyConvex(mu_big_f));
    }
    if !(mu_f >= 0.0) || !(beta >= mu_f) {
        return Err(invalid(format!("need β ≥ μ_f ≥ 0, got β = {beta}, μ_f = {mu_f}")));
    }
    if !(eps > 0.0 && eps < gap0) {
        return Err(invalid(format!("need 0 < ε < gap0, got ε = {eps}, gap0 = {gap0}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("ρ = {rho} must lie in (0, 1]")));
    }
    let factor = (n as f64 / expected_size) * ((beta + mu_big_f - mu_f) / mu_big_f);
    Ok(math::ceil(factor * math::ln(gap0 / (eps * rho))) as u64)
}

/// Ratio of the PCDM and DQAM rate gaps `(1 − q^PCDM)/(1 − q^DQAM)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Speedup {
    /// `(16L′(ω−1)³ + 4(ω−1)μ_F(e))/(L̄ω)`.
    pub ratio: f64,
    /// `16(ω−1)³/ω · L′/L̄`.
    pub lower_bound: f64,
}

/// Speedup of fully parallel PCDM over DQAM in the regime `μ_F(e) = μ_f(e)`
/// (checked to 1e-9 relative), with `μ(L) ≈ μ(e)/L̄`.
pub fn speedup_ratio(
    omega: f64,
    l_prime: f64,
    l_bar: f64,
    mu_big_f_e: f64,
    mu_f_e: f64,
) -> Result<Speedup> {
    if !(omega >= 2.0) {
        return Err(invalid(format!("the DQAM rate needs ω ≥ 2, got {omega}")));
    }
    finite_positive(l_prime, "L′")?;
    finite_positive(l_bar, "L̄")?;
    if !(mu_big_f_e >= 0.0) {
        return Err(invalid(format!("μ_F(e) = {mu_big_f_e} must be ≥ 0")));
    }
    if math::abs(mu_big_f_e - mu_f_e) > 1e-9 * mu_big_f_e.max(mu_f_e).max(1e-300) {
        return Err(invalid(format!(
            "the speedup formula assumes μ_F(e) = μ_f(e), got {mu_big_f_e} and {mu_f_e}"
        )));
    }
    let w1 = omega - 1.0;
    let cube = 16.0 * l_prime * w1 * w1 * w1;
    Ok(Speedup {
        ratio: (cube + 4.0 * w1 * mu_big_f_e) / (l_bar * omega),
        lower_bound: cube / (omega * l_bar),
    })
}

/// `T(τ) = ⌈τ/p⌉·(n/τ)·β(τ)` over a grid of τ values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TCurve {
    pub values: Vec<(usize, f64)>,
    /// Every grid point within 1e-12 (relative) of the minimum.
    pub minimizers: Vec<usize>,
    /// `p` when it is among the minimizers, otherwise the smallest one.
    pub tau_opt: usize,
}

impl TCurve {
    pub fn p_is_optimal(&self, p: usize) -> bool {
        self.minimizers.contains(&p)
    }
}

/// Parallel time model for `p` processors, `n` blocks and separability `ω`.
pub fn t_value(n: usize, p: usize, omega: usize, tau: usize) -> Result<f64> {
    if p == 0 || p > n {
        return Err(invalid(format!("need 1 ≤ p ≤ n, got p = {p}, n = {n}")));
    }
    let beta = eso_beta(omega, tau, n)?;
    Ok(tau.div_ceil(p) as f64 * (n as f64 / tau as f64) * beta)
}

pub fn t_curve(n: usize, p: usize, omega: usize, grid: &[usize]) -> Result<TCurve> {
    if n < 2 {
        return Err(invalid(format!("the time model needs n > 1, got {n}")));
    }
    if grid.is_empty() {
        return Err(invalid("empty τ grid".into()));
    }
    let values = grid
        .iter()
        .map(|&tau| Ok((tau, t_value(n, p, omega, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    let min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let minimizers: Vec<usize> = values
        .iter()
        .filter(|v| v.1 <= min * (1.0 + 1e-12))
        .map(|v| v.0)
        .collect();
    let tau_opt = if minimizers.contains(&p) {
        p
    } else {
        *minimizers.iter().min().unwrap()
    };
    Ok(TCurve {
        values,
        minimizers,
        tau_opt,
    })
}

/// Both sides of `H_{β,w}(x + h(x)) − F* ≤ ((β − μ_f)/(μ_F + β − μ_f))·(F(x) − F*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub factor: f64,
    pub holds: bool,
}

/// Contraction factor `(β − μ_f)/(μ_F + β − μ_f)`.
pub fn contraction_factor(beta: f64, mu_big_f: f64, mu_f: f64) -> Result<f64> {
    if !(mu_big_f > 0.0) {
        return Err(Error::NotStronglyConvex(mu_big_f));
    }
    if !(beta >= mu_f) {
        return Err(invalid(format!("need β ≥ μ_f, got β = {beta}, μ_f = {mu_f}")));
    }
    Ok((beta - mu_f) / (mu_big_f + beta - mu_f))
}

/// Evaluates the contraction inequality at `x`, with `h(x)` the exact
/// minimizer of `H_{β,w}(x + ·)`. `sc` must hold the constants for
/// `params.w`. Tolerance `1e-9·max(1, |F(x)|)`.
pub fn verify_contraction_lemma(
    p: &CompositeProblem,
    params: &EsoParams,
    x: &BlockVector,
    opt: &ReferenceOptimum,
    sc: &StrongConvexityInfo,
) -> Result<ContractionCheck> {
    let n = p.num_blocks();
    if params.w.len() != n || sc.w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: params.w.len().min(sc.w.len()),
        });
    }
    if sc.w.iter().zip(&params.w).any(|(a, b)| math::abs(a - b) > 1e-12 * b.max(1.0)) {
        return Err(invalid("strong convexity constants were computed for other weights".into()));
    }
    let factor = contraction_factor(params.beta, sc.mu_big_f, sc.mu_f)?;
    let models = Stepper::eso_models(p, params.beta, &params.w)?;
    let all: Vec<usize> = (0..n).collect();
    let next = Stepper::new(p, UpdateRule::Models(models), 1.0).step(x, &all)?;
    let h: Vec<f64> = next
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let norms = p.norms().clone().with_weights(params.w.clone())?;
    let g = p.grad_f(x)?;
    let fx = p.eval_f(x)?;
    let big_fx = p.eval(x)?;
    let h_value = fx
        + linalg::dot(g.as_slice(), &h)
        + 0.5 * params.beta * norms.weighted_norm_sq(&h)
        + p.eval_psi(&next)?;
    let lhs = h_value - opt.value;
    let rhs = factor * (big_fx - opt.value);
    Ok(ContractionCheck {
        lhs,
        rhs,
        factor,
        holds: lhs <= rhs + 1e-9 * math::abs(big_fx).max(1.0),
    })
}

/// `k = ⌈(1/γ)·log(gap0/ε)⌉`, verified to satisfy `(1 − γ)^k·gap0 ≤ ε`.
pub fn geometric_decay_bound(gap0: f64, eps: f64, gamma: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < gap0 && gap0.is_finite()) {
        return Err(invalid(format!("need 0 < ε < gap0, got ε = {eps}, gap0 = {gap0}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("γ = {gamma} must lie in (0, 1]")));
    }
    let k = math::ceil(math::ln(gap0 / eps) / gamma) as u64;
    let decayed = libm::pow(1.0 - gamma, k as f64) * gap0;
    if !(decayed <= eps * (1.0 + 1e-12)) {
        return Err(Error::NotCertified(format!(
            "(1 − γ)^k·gap0 = {decayed} exceeds ε = {eps} at k = {k}"
        )));
    }
    Ok(k)
}

/// `μ(L) ≈ μ(e)/L̄`, the approximation used to compare the two rates when the
/// block constants differ.
pub fn approx_mu_lipschitz(mu_e: f64, l_bar: f64) -> Result<f64> {
    finite_positive(l_bar, "L̄")?;
    Ok(mu_e / l_bar)
}

/// Summary of the rate and complexity quantities for one configuration.
/// Entries that cannot be evaluated are `None` with a reason in `notes`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexityEstimate {
    pub omega: Option<usize>,
    pub q_pcdm: Option<f64>,
    pub q_dqam: Option<f64>,
    pub k_highprob: Option<u64>,
    pub speedup: Option<Speedup>,
    pub t_curve: Option<TCurve>,
    pub tau_opt: Option<usize>,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn q_pcdm_examples() {
        assert!(close(q_pcdm(1.0, 1.0, 10.0).unwrap(), 0.9));
        assert!(close(q_pcdm(1.0, 1.0, 1.0).unwrap(), 0.0));
        assert!(close(q_pcdm(7.0, 0.0, 7.0).unwrap(), 0.5));
        assert!(matches!(q_pcdm(0.0, 0.0, 2.0), Err(Error::NotStronglyConvex(_))));
    }

    #[test]
    fn q_dqam_examples() {
        assert!(close(q_dqam(4.0, 1.0, 2.0).unwrap(), 0.875));
        assert!(close(q_dqam(1.0, 1.0, 10.0).unwrap(), 1.0 - 1.0 / (16.0 * 729.0 + 36.0)));
        assert!((q_dqam(1e12, 1.0, 5.0).unwrap() - (1.0 - 1.0 / 16.0)).abs() < 1e-10);
        assert!(q_dqam(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn k_bound_unit_case() {
        let e = core::f64::consts::E;
        assert_eq!(k_bound(4, 4.0, 1.0, 1.0, 1.0, e, 1.0, 1.0).unwrap(), 1);
        assert!(k_bound(4, 4.0, 1.0, 1.0, 1.0, 1.0, 2.0, 0.5).is_err());
        assert!(k_bound(4, 4.0, 0.5, 1.0, 1.0, 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn speedup_examples() {
        let s = speedup_ratio(10.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(close(s.lower_bound, 1166.4));
        assert!(s.ratio >= s.lower_bound);
        let s = speedup_ratio(2.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(close(s.ratio, 8.0));
        assert!(speedup_ratio(2.0, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(speedup_ratio(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn t_curve_examples() {
        let grid: Vec<usize> = (1..=100).collect();
        let c = t_curve(100, 4, 10, &grid).unwrap();
        assert_eq!(c.minimizers, vec![4]);
        assert_eq!(c.tau_opt, 4);
        let c = t_curve(100, 100, 10, &grid).unwrap();
        assert_eq!(c.tau_opt, 100);
        let c = t_curve(100, 1, 10, &grid).unwrap();
        assert_eq!(c.minimizers, vec![1]);
        assert!(t_curve(100, 0, 10, &grid).is_err());
    }

    #[test]
    fn geometric_examples() {
        let e = core::f64::consts::E;
        assert_eq!(geometric_decay_bound(e, 1.0, 0.5).unwrap(), 2);
        assert_eq!(geometric_decay_bound(e * e, 1.0, 1.0).unwrap(), 2);
        assert!(geometric_decay_bound(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn contraction_factor_monotone_in_beta() {
        let mut last = 0.0;
        for k in 1..50 {
            let f = contraction_factor(k as f64, 0.7, 0.2).unwrap();
            assert!(f > last && f < 1.0);
            last = f;
        }
    }
}
