//! The composite problem `F(x) = f(x) + Ψ(x)` with the quadratic penalty
//! `f(x) = (r/2)‖b − Ax‖²` and block-separable `Ψ`.
//!
//! The multiplier term `−⟨π, Ax⟩` of the augmented Lagrangian is folded
//! into the blocks as `Ψ_i(x^(i)) = g_i(x^(i)) − ⟨A_iᵀπ, x^(i)⟩`; the
//! constant `⟨π, b⟩` is dropped.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::blockstruct::{
    block_lipschitz_constants, BlockMatrix, BlockNorms, BlockPartition, BlockVector,
};
use crate::linalg::{self, Cholesky, DenseMatrix};
use crate::math;
use crate::{Error, Result};

/// Stopping tolerance of the projected Gauss-Seidel solve for box blocks.
pub const BOX_QP_TOL: f64 = 1e-12;
const BOX_QP_MAX_SWEEPS: usize = 1_000_000;
/// Largest dimension for which dense `N × N` Hessians are assembled.
pub const DENSE_LIMIT: usize = 4000;

/// One block `Ψ_i` of the separable part.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BlockPsi {
    /// `Ψ_i ≡ 0`.
    Zero,
    /// `⟨c, u⟩` plus the indicator of `lo ≤ u ≤ hi`.
    LinearBox {
        c: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `⟨c, u⟩ + (μ/2)‖u‖²`, `μ ≥ 0`.
    LinearQuadratic { c: Vec<f64>, mu: f64 },
}

impl BlockPsi {
    pub fn quadratic(size: usize, mu: f64) -> Self {
        BlockPsi::LinearQuadratic {
            c: vec![0.0; size],
            mu,
        }
    }

    pub fn boxed(c: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        BlockPsi::LinearBox { c, lo, hi }
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        let check_len = |v: &[f64]| {
            if v.len() != size {
                Err(Error::DimensionMismatch {
                    expected: size,
                    found: v.len(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            BlockPsi::Zero => Ok(()),
            BlockPsi::LinearBox { c, lo, hi } => {
                check_len(c)?;
                check_len(lo)?;
                check_len(hi)?;
                if let Some(j) = (0..size).find(|&j| !(lo[j] <= hi[j])) {
                    return Err(Error::InvalidParameter(format!(
                        "box bounds lo[{j}] = {} > hi[{j}] = {}",
                        lo[j], hi[j]
                    )));
                }
                Ok(())
            }
            BlockPsi::LinearQuadratic { c, mu } => {
                check_len(c)?;
                if !(*mu >= 0.0) || !mu.is_finite() {
                    return Err(Error::InvalidParameter(format!("μ = {mu} must be ≥ 0")));
                }
                Ok(())
            }
        }
    }

    /// `Ψ_i(u)`; `+∞` outside a box.
    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            BlockPsi::Zero => 0.0,
            BlockPsi::LinearBox { c, lo, hi } => {
                if u.iter().zip(lo.iter().zip(hi)).any(|(x, (l, h))| x < l || x > h) {
                    f64::INFINITY
                } else {
                    linalg::dot(c, u)
                }
            }
            BlockPsi::LinearQuadratic { c, mu } => {
                linalg::dot(c, u) + 0.5 * mu * linalg::dot(u, u)
            }
        }
    }

    /// Strong convexity modulus of `Ψ_i` in the Euclidean norm.
    pub fn mu(&self) -> f64 {
        match self {
            BlockPsi::LinearQuadratic { mu, .. } => *mu,
            _ => 0.0,
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, BlockPsi::LinearBox { .. })
    }

    pub fn linear_term(&self) -> Option<&[f64]> {
        match self {
            BlockPsi::Zero => None,
            BlockPsi::LinearBox { c, .. } | BlockPsi::LinearQuadratic { c, .. } => Some(c),
        }
    }

    /// Gradient of the smooth part at `u` (box: the linear term only).
    pub fn smooth_gradient(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BlockPsi::Zero => vec![0.0; u.len()],
            BlockPsi::LinearBox { c, .. } => c.clone(),
            BlockPsi::LinearQuadratic { c, mu } => {
                c.iter().zip(u).map(|(ci, ui)| ci + mu * ui).collect()
            }
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, u: &mut [f64]) {
        if let BlockPsi::LinearBox { lo, hi, .. } = self {
            for (x, (l, h)) in u.iter_mut().zip(lo.iter().zip(hi)) {
                *x = x.max(*l).min(*h);
            }
        }
    }

    /// The same block with `shift` added to its linear term.
    pub fn shifted(&self, shift: &[f64]) -> BlockPsi {
        if shift.iter().all(|s| *s == 0.0) {
            return self.clone();
        }
        let add = |c: &[f64]| c.iter().zip(shift).map(|(a, b)| a + b).collect::<Vec<_>>();
        match self {
            BlockPsi::Zero => BlockPsi::LinearQuadratic {
                c: shift.to_vec(),
                mu: 0.0,
            },
            BlockPsi::LinearBox { c, lo, hi } => BlockPsi::LinearBox {
                c: add(c),
                lo: lo.clone(),
                hi: hi.clone(),
            },
            BlockPsi::LinearQuadratic { c, mu } => BlockPsi::LinearQuadratic { c: add(c), mu: *mu },
        }
    }

    /// `argmin_h ⟨g, h⟩ + ½⟨H h, h⟩ + Ψ_i(x + h)` for SPD `H`.
    ///
    /// Non-box kinds are solved directly; box kinds by projected Gauss-Seidel
    /// on `u = x + h` until no coordinate moves by more than `1e-12`
    /// relative. `chol`, when given, must factor `H` (used for `Zero` only).
    pub fn solve_quadratic_model(
        &self,
        x: &[f64],
        g: &[f64],
        h_mat: &DenseMatrix,
        chol: Option<&Cholesky>,
        block: usize,
    ) -> Result<Vec<f64>> {
        let k = x.len();
        match self {
            BlockPsi::Zero => {
                let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
                match chol {
                    Some(c) => Ok(c.solve(&rhs)),
                    None => Ok(Cholesky::factor(h_mat, 1e-13)
                        .map_err(|_| Error::SingularBlockSystem { block })?
                        .solve(&rhs)),
                }
            }
            BlockPsi::LinearQuadratic { c, mu } => {
                let rhs: Vec<f64> = (0..k).map(|j| -(g[j] + c[j] + mu * x[j])).collect();
                if *mu == 0.0 {
                    if let Some(ch) = chol {
                        return Ok(ch.solve(&rhs));
                    }
                }
                let mut m = h_mat.clone();
                m.add_diagonal(*mu);
                Ok(Cholesky::factor(&m, 1e-13)
                    .map_err(|_| Error::SingularBlockSystem { block })?
                    .solve(&rhs))
            }
            BlockPsi::LinearBox { c, lo, hi } => {
                for j in 0..k {
                    if !(h_mat[(j, j)] > 0.0) {
                        return Err(Error::SingularBlockSystem { block });
                    }
                }
                let mut u: Vec<f64> = x.to_vec();
                self.project(&mut u);
                let mut h: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
                // q = g + c + H h
                let mut q: Vec<f64> = h_mat.mul_vec(&h);
                for j in 0..k {
                    q[j] += g[j] + c[j];
                }
                for _ in 0..BOX_QP_MAX_SWEEPS {
                    let mut max_move = 0.0f64;
                    let mut scale = 1.0f64;
                    for j in 0..k {
                        let hjj = h_mat[(j, j)];
                        let target = (u[j] - q[j] / hjj).max(lo[j]).min(hi[j]);
                        let delta = target - u[j];
                        if delta != 0.0 {
                            u[j] = target;
                            h[j] += delta;
                            for l in 0..k {
                                q[l] += h_mat[(l, j)] * delta;
                            }
                        }
                        max_move = max_move.max(math::abs(delta));
                        scale = scale.max(math::abs(u[j]));
                    }
                    if max_move <= BOX_QP_TOL * scale {
                        return Ok(h);
                    }
                }
                Err(Error::NonConvergence {
                    what: format!("box subproblem of block {block}"),
                    iterations: BOX_QP_MAX_SWEEPS,
                })
            }
        }
    }
}

/// `argmin_u (d/2)‖u − v‖² + Ψ_i(u)`.
pub fn prox_psi_block(psi: &BlockPsi, v: &[f64], d: f64) -> Result<Vec<f64>> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("prox weight d = {d} must be positive")));
    }
    Ok(match psi {
        BlockPsi::Zero => v.to_vec(),
        BlockPsi::LinearBox { c, lo, hi } => v
            .iter()
            .enumerate()
            .map(|(j, vj)| (vj - c[j] / d).max(lo[j]).min(hi[j]))
            .collect(),
        BlockPsi::LinearQuadratic { c, mu } => v
            .iter()
            .zip(c)
            .map(|(vj, cj)| (d * vj - cj) / (d + mu))
            .collect(),
    })
}

/// Strong convexity constants of `f`, `Ψ` and `F` with respect to
/// `‖·‖_w`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrongConvexityInfo {
    pub mu_big_f: f64,
    pub mu_f: f64,
    pub mu_psi: f64,
    pub w: Vec<f64>,
}

impl StrongConvexityInfo {
    /// Constants for the weights `t·w`: each modulus divided by `t`.
    pub fn rescaled(&self, t: f64) -> Self {
        Self {
            mu_big_f: self.mu_big_f / t,
            mu_f: self.mu_f / t,
            mu_psi: self.mu_psi / t,
            w: self.w.iter().map(|v| v * t).collect(),
        }
    }
}

/// A certified minimizer of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub x: BlockVector,
    pub value: f64,
    /// Stationarity (smooth kinds) or projected-gradient (box kinds) norm.
    pub certificate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeProblem {
    a: BlockMatrix,
    r: f64,
    pi: Vec<f64>,
    base_psi: Vec<BlockPsi>,
    psi: Vec<BlockPsi>,
    norms: BlockNorms,
    lipschitz: Vec<f64>,
}

impl CompositeProblem {
    /// Builds the problem with unit norms (`B_i = I`, `w = e`) and `π = 0`.
    /// Rejects zero blocks, since the methods need `L_i > 0`.
    pub fn new(a: BlockMatrix, r: f64, psi: Vec<BlockPsi>) -> Result<Self> {
        let norms = BlockNorms::unit(a.partition().clone());
        Self::with_norms(a, r, psi, norms)
    }

    pub fn with_norms(a: BlockMatrix, r: f64, psi: Vec<BlockPsi>, norms: BlockNorms) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty r = {r} must be positive")));
        }
        let n = a.num_blocks();
        if psi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: psi.len(),
            });
        }
        for (i, p) in psi.iter().enumerate() {
            p.validate(a.partition().size(i))?;
        }
        a.validate_no_zero_blocks()?;
        let lipschitz = block_lipschitz_constants(&a, r, &norms)?.require_positive()?;
        let m = a.rows();
        Ok(Self {
            a,
            r,
            pi: vec![0.0; m],
            psi: psi.clone(),
            base_psi: psi,
            norms,
            lipschitz,
        })
    }

    /// `Ψ ≡ 0`.
    pub fn feasibility(a: BlockMatrix, r: f64) -> Result<Self> {
        let n = a.num_blocks();
        Self::new(a, r, vec![BlockPsi::Zero; n])
    }

    /// Same problem with multiplier `π`, refolding `−A_iᵀπ` into every
    /// `Ψ_i`.
    pub fn with_multiplier(mut self, pi: Vec<f64>) -> Result<Self> {
        if pi.len() != self.a.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.a.rows(),
                found: pi.len(),
            });
        }
        let at_pi = self.a.tr_mul_vec(&pi);
        let partition = self.a.partition().clone();
        self.psi = self
            .base_psi
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let shift: Vec<f64> = at_pi[partition.range(i)].iter().map(|v| -v).collect();
                p.shifted(&shift)
            })
            .collect();
        self.pi = pi;
        Ok(self)
    }

    /// Same problem measured in different block norms.
    pub fn rebased(&self, norms: BlockNorms) -> Result<Self> {
        let p = Self::with_norms(self.a.clone(), self.r, self.base_psi.clone(), norms)?;
        p.with_multiplier(self.pi.clone())
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        self.a.rhs()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn partition(&self) -> &BlockPartition {
        self.a.partition()
    }

    pub fn num_blocks(&self) -> usize {
        self.a.num_blocks()
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// Effective `Ψ_i`, multiplier term included.
    pub fn psi(&self, i: usize) -> &BlockPsi {
        &self.psi[i]
    }

    pub fn psi_blocks(&self) -> &[BlockPsi] {
        &self.psi
    }

    /// `Ψ_i` as given, without the multiplier term.
    pub fn base_psi(&self) -> &[BlockPsi] {
        &self.base_psi
    }

    pub fn norms(&self) -> &BlockNorms {
        &self.norms
    }

    /// `L_i` with respect to the problem's block metrics.
    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn is_psi_zero(&self) -> bool {
        self.psi.iter().all(|p| matches!(p, BlockPsi::Zero))
    }

    pub fn has_box(&self) -> bool {
        self.psi.iter().any(BlockPsi::is_box)
    }

    fn check_x(&self, x: &BlockVector) -> Result<()> {
        if x.partition() != self.a.partition() {
            if x.as_slice().len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: x.as_slice().len(),
                });
            }
            return Err(Error::PartitionMismatch);
        }
        Ok(())
    }

    /// `b − Ax` for a raw vector.
    pub(crate) fn residual_raw(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        self.a.rhs().iter().zip(&ax).map(|(b, v)| b - v).collect()
    }

    pub(crate) fn f_from_residual(&self, rho: &[f64]) -> f64 {
        0.5 * self.r * linalg::dot(rho, rho)
    }

    pub(crate) fn psi_raw(&self, x: &[f64]) -> f64 {
        let p = self.partition();
        (0..self.num_blocks())
            .map(|i| self.psi[i].value(&x[p.range(i)]))
            .sum()
    }

    pub(crate) fn grad_block_from_residual(&self, rho: &[f64], i: usize) -> Vec<f64> {
        let r = self.r;
        self.a
            .block_unchecked(i)
            .tr_mul(rho)
            .into_iter()
            .map(|v| -r * v)
            .collect()
    }

    /// `f(x) = (r/2)‖b − Ax‖²`.
    pub fn eval_f(&self, x: &BlockVector) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.f_from_residual(&self.residual_raw(x.as_slice())))
    }

    /// `Ψ(x) = Σ_i Ψ_i(x^(i))`.
    pub fn eval_psi(&self, x: &BlockVector) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.psi_raw(x.as_slice()))
    }

    /// `F(x) = f(x) + Ψ(x)`.
    pub fn eval(&self, x: &BlockVector) -> Result<f64> {
        self.check_x(x)?;
        let rho = self.residual_raw(x.as_slice());
        Ok(self.f_from_residual(&rho) + self.psi_raw(x.as_slice()))
    }

    /// `f'(x) = r·Aᵀ(Ax − b)`.
    pub fn grad_f(&self, x: &BlockVector) -> Result<BlockVector> {
        self.check_x(x)?;
        let rho = self.residual_raw(x.as_slice());
        let g: Vec<f64> = self.a.tr_mul_vec(&rho).into_iter().map(|v| -self.r * v).collect();
        BlockVector::new(self.partition().clone(), g)
    }

    /// `π + r(b − Az)`, returned as the updated problem.
    pub fn multiplier_update(&self, z: &BlockVector) -> Result<Self> {
        self.check_x(z)?;
        if z.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("multiplier update point".into()));
        }
        let rho = self.residual_raw(z.as_slice());
        let pi: Vec<f64> = self.pi.iter().zip(&rho).map(|(p, v)| p + self.r * v).collect();
        self.clone().with_multiplier(pi)
    }

    /// `f(x)/(bᵀb)` with `r` folded out, i.e. `½‖b − Ax‖²/bᵀb`.
    pub fn feasibility_gap(&self, x: &BlockVector) -> Result<f64> {
        self.check_x(x)?;
        let bb = linalg::dot(self.rhs(), self.rhs());
        if bb == 0.0 {
            return Err(Error::ZeroRhs);
        }
        let rho = self.residual_raw(x.as_slice());
        Ok(0.5 * linalg::dot(&rho, &rho) / bb)
    }

    /// Dense `r·AᵀA`.
    pub fn dense_hessian(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dimension {n} exceeds the dense limit {DENSE_LIMIT}"
            )));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.a.rows()];
        for (r, c, v) in self.a.triplets() {
            rows[r].push((c, v));
        }
        let mut h = DenseMatrix::zeros(n, n);
        for row in rows {
            for &(c1, v1) in &row {
                for &(c2, v2) in &row {
                    h[(c1, c2)] += self.r * v1 * v2;
                }
            }
        }
        Ok(h)
    }

    fn block_mus(&self) -> Vec<f64> {
        let p = self.partition();
        let mut out = vec![0.0; self.dim()];
        for i in 0..self.num_blocks() {
            let mu = self.psi[i].mu();
            for j in p.range(i) {
                out[j] = mu;
            }
        }
        out
    }

    /// `μ_f(w)`, `μ_Ψ(w)`, `μ_F(w)` for the problem's block metrics and the
    /// given weights. Box indicators contribute nothing (the constants of the
    /// smooth part are reported).
    pub fn strong_convexity_constants(&self, w: &[f64]) -> Result<StrongConvexityInfo> {
        let mus: Vec<f64> = self.psi.iter().map(BlockPsi::mu).collect();
        strong_convexity_from_parts(&self.dense_hessian()?, &mus, &self.norms, w)
    }

    /// Stationarity measure at `x`: per block, the gradient of the smooth
    /// objective for free blocks and `x − P(x − ∇)` for box blocks.
    pub fn stationarity_norm(&self, x: &BlockVector) -> Result<f64> {
        self.check_x(x)?;
        let g = self.grad_f(x)?;
        let mut acc = 0.0;
        for i in 0..self.num_blocks() {
            let xi = x.block(i);
            let gs = self.psi[i].smooth_gradient(xi);
            let full: Vec<f64> = g.block(i).iter().zip(&gs).map(|(a, b)| a + b).collect();
            if self.psi[i].is_box() {
                let mut u: Vec<f64> = xi.iter().zip(&full).map(|(a, b)| a - b).collect();
                self.psi[i].project(&mut u);
                acc += xi.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            } else {
                acc += linalg::dot(&full, &full);
            }
        }
        Ok(math::sqrt(acc))
    }

    /// Computes and certifies `x*` and `F* = F(x*)`.
    ///
    /// Smooth kinds solve `(r·AᵀA + Diag(μ_i)) x = r·Aᵀb − c` by conjugate
    /// gradient to relative residual 1e-12, after a dense Cholesky check of
    /// definiteness when the dimension allows it. Box kinds run fully
    /// parallel PCDM until the per-step decrease of `F` falls below 1e-14
    /// (relative) and the projected gradient is below 1e-10 (relative to
    /// `max(1, ‖r·Aᵀb‖)`).
    pub fn reference_optimum(&self) -> Result<ReferenceOptimum> {
        if self.has_box() {
            return self.reference_optimum_box();
        }
        let dim = self.dim();
        let partition = self.partition().clone();
        let mus = self.block_mus();
        let mut rhs: Vec<f64> = self.a.tr_mul_vec(self.rhs()).into_iter().map(|v| self.r * v).collect();
        for i in 0..self.num_blocks() {
            if let Some(c) = self.psi[i].linear_term() {
                for (k, j) in partition.range(i).enumerate() {
                    rhs[j] -= c[k];
                }
            }
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            let av = self.a.mul_vec(v);
            let atav = self.a.tr_mul_vec(&av);
            for j in 0..dim {
                out[j] = self.r * atav[j] + mus[j] * v[j];
            }
        };
        let mut x = vec![0.0; dim];
        if dim <= DENSE_LIMIT {
            let mut h = self.dense_hessian()?;
            for (j, mu) in mus.iter().enumerate() {
                h[(j, j)] += mu;
            }
            let chol = Cholesky::factor(&h, 1e-12).map_err(|_| {
                Error::NotCertified("Hessian is singular (rank-deficient A without strongly convex Ψ)".into())
            })?;
            x = chol.solve(&rhs);
        }
        linalg::conjugate_gradient(apply, &rhs, &mut x, 1e-12, 20 * dim.max(50))
            .map_err(|e| Error::NotCertified(format!("{e}")))?;
        let xv = BlockVector::new(partition, x)?;
        let certificate = self.stationarity_norm(&xv)?;
        let scale = linalg::norm2(&rhs).max(1.0);
        if !(certificate <= 1e-9 * scale) {
            return Err(Error::NotCertified(format!(
                "stationarity residual {certificate:e} too large"
            )));
        }
        let value = self.eval(&xv)?;
        Ok(ReferenceOptimum {
            x: xv,
            value,
            certificate,
        })
    }

    fn reference_optimum_box(&self) -> Result<ReferenceOptimum> {
        use crate::solvers::pcdm::FullParallelPcdm;
        let sep = crate::separability::partial_separability_degree(&self.a)?;
        let stepper = FullParallelPcdm::new(self, sep as f64)?;
        let partition = self.partition().clone();
        let mut x = vec![0.0; self.dim()];
        for i in 0..self.num_blocks() {
            self.psi[i].project(&mut x[partition.range(i)]);
        }
        let mut xv = BlockVector::new(partition, x)?;
        let mut fx = self.eval(&xv)?;
        let scale = linalg::norm2(&self.a.tr_mul_vec(self.rhs())).max(1.0) * self.r.max(1.0);
        const MAX_ITERS: usize = 2_000_000;
        for _ in 0..MAX_ITERS {
            let next = stepper.step(&xv)?;
            let fn_ = self.eval(&next)?;
            let decrease = fx - fn_;
            xv = next;
            fx = fn_;
            if decrease <= 1e-14 * fx.abs().max(1.0) {
                let certificate = self.stationarity_norm(&xv)?;
                if certificate < 1e-10 * scale {
                    return Ok(ReferenceOptimum {
                        x: xv,
                        value: fx,
                        certificate,
                    });
                }
            }
        }
        Err(Error::NotCertified(format!(
            "projected gradient did not reach tolerance in {MAX_ITERS} iterations"
        )))
    }
}

/// Strong convexity constants from the dense Hessian of `f`, the per-block
/// quadratic moduli `μ_i` of `Ψ` and the block metrics `B_i`, for weights
/// `w`.
///
/// `μ_f` and `μ_F` are the smallest generalized eigenvalues of `∇²f` and
/// `∇²f + Diag(μ_i I)` against `Diag(w_i B_i)` (inverse power iteration,
/// 1e-12 relative; a singular Hessian gives 0). `μ_Ψ = min_i μ_i/(w_i
/// λ_max(B_i))`.
pub fn strong_convexity_from_parts(
    hess_f: &DenseMatrix,
    block_mu: &[f64],
    norms: &BlockNorms,
    w: &[f64],
) -> Result<StrongConvexityInfo> {
    let p = norms.partition().clone();
    let n = p.num_blocks();
    if w.len() != n || block_mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if w.len() != n { w.len() } else { block_mu.len() },
        });
    }
    if hess_f.rows() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: hess_f.rows(),
        });
    }
    let norms = norms.clone().with_weights(w.to_vec())?;
    let apply_d = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let r = p.range(i);
            let bv = norms.metric(i).apply(&v[r.clone()]);
            for (o, b) in out[r].iter_mut().zip(bv) {
                *o = w[i] * b;
            }
        }
    };
    let cap = 10 * p.dim().max(1000);
    let mu_f = linalg::smallest_generalized_eigenvalue(hess_f, apply_d, 1e-12, cap)?.value;
    let mut hbig = hess_f.clone();
    for i in 0..n {
        for j in p.range(i) {
            hbig[(j, j)] += block_mu[i];
        }
    }
    let mu_big_f = linalg::smallest_generalized_eigenvalue(&hbig, apply_d, 1e-12, cap)?.value;
    let mu_psi = (0..n)
        .map(|i| block_mu[i] / (w[i] * norms.metric(i).lambda_max()))
        .fold(f64::INFINITY, f64::min);
    Ok(StrongConvexityInfo {
        mu_big_f,
        mu_f,
        mu_psi,
        w: w.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize, b: Vec<f64>) -> BlockMatrix {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
        }
        BlockMatrix::from_dense(n, BlockPartition::scalar(n).unwrap(), &d, b).unwrap()
    }

    #[test]
    fn prox_closed_forms() {
        assert_eq!(prox_psi_block(&BlockPsi::Zero, &[1.5, -2.0], 3.0).unwrap(), vec![1.5, -2.0]);
        let bx = BlockPsi::boxed(vec![0.0], vec![-1.0], vec![1.0]);
        assert_eq!(prox_psi_block(&bx, &[0.3], 2.0).unwrap(), vec![0.3]);
        assert_eq!(prox_psi_block(&bx, &[3.0], 2.0).unwrap(), vec![1.0]);
        let q = BlockPsi::quadratic(1, 1.0);
        assert_eq!(prox_psi_block(&q, &[2.0], 1.0).unwrap(), vec![1.0]);
        assert!(prox_psi_block(&q, &[2.0], 0.0).is_err());
    }

    #[test]
    fn f_at_feasible_and_zero() {
        let p = CompositeProblem::feasibility(eye(2, vec![1.0, 2.0]), 3.0).unwrap();
        let part = p.partition().clone();
        let x = BlockVector::new(part.clone(), vec![1.0, 2.0]).unwrap();
        assert_eq!(p.eval_f(&x).unwrap(), 0.0);
        assert_eq!(p.grad_f(&x).unwrap().as_slice(), &[0.0, 0.0]);
        let z = BlockVector::zeros(part);
        assert_eq!(p.eval_f(&z).unwrap(), 1.5 * 5.0);
        assert_eq!(p.feasibility_gap(&z).unwrap(), 0.5);
        assert_eq!(p.feasibility_gap(&x).unwrap(), 0.0);
    }

    #[test]
    fn grad_single_block_identity() {
        let a = BlockMatrix::from_dense(
            2,
            BlockPartition::new(&[2]).unwrap(),
            &[1.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let p = CompositeProblem::feasibility(a, 1.0).unwrap();
        let x = BlockVector::new(p.partition().clone(), vec![0.7, -1.1]).unwrap();
        assert_eq!(p.grad_f(&x).unwrap().as_slice(), &[0.7, -1.1]);
    }

    #[test]
    fn zero_rhs_gap_errors() {
        let p = CompositeProblem::feasibility(eye(1, vec![0.0]), 1.0).unwrap();
        let z = BlockVector::zeros(p.partition().clone());
        assert_eq!(p.feasibility_gap(&z), Err(Error::ZeroRhs));
    }

    #[test]
    fn multiplier_update_cases() {
        let p = CompositeProblem::feasibility(eye(2, vec![1.0, 0.0]), 1.0).unwrap();
        let part = p.partition().clone();
        let z = BlockVector::zeros(part.clone());
        let p1 = p.multiplier_update(&z).unwrap();
        assert_eq!(p1.pi(), &[1.0, 0.0]);
        // folded linear term −A_iᵀπ
        assert_eq!(p1.psi(0), &BlockPsi::LinearQuadratic { c: vec![-1.0], mu: 0.0 });
        assert_eq!(p1.psi(1), &BlockPsi::Zero);
        let feasible = BlockVector::new(part, vec![1.0, 0.0]).unwrap();
        assert_eq!(p1.multiplier_update(&feasible).unwrap().pi(), &[1.0, 0.0]);
        let p2 = p1.multiplier_update(&z).unwrap();
        assert_eq!(p2.pi(), &[2.0, 0.0]);
    }

    #[test]
    fn reference_optimum_identity() {
        let p = CompositeProblem::feasibility(eye(3, vec![1.0, -2.0, 0.5]), 1.0).unwrap();
        let opt = p.reference_optimum().unwrap();
        for (a, b) in opt.x.as_slice().iter().zip([1.0, -2.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(opt.value.abs() < 1e-24);
    }

    #[test]
    fn reference_optimum_one_d_quadratic() {
        let p = CompositeProblem::new(eye(1, vec![1.0]), 1.0, vec![BlockPsi::quadratic(1, 1.0)])
            .unwrap();
        let opt = p.reference_optimum().unwrap();
        assert!((opt.x.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((opt.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn reference_optimum_rank_deficient_errors() {
        let a = BlockMatrix::from_dense(
            1,
            BlockPartition::scalar(2).unwrap(),
            &[1.0, 1.0],
            vec![1.0],
        )
        .unwrap();
        let p = CompositeProblem::feasibility(a, 1.0).unwrap();
        assert!(matches!(p.reference_optimum(), Err(Error::NotCertified(_))));
    }

    #[test]
    fn reference_optimum_box() {
        // min ½(1 − x₁ − x₂)² with 0 ≤ x ≤ 0.25 → x = (0.25, 0.25)
        let a = BlockMatrix::from_dense(1, BlockPartition::scalar(2).unwrap(), &[1.0, 1.0], vec![1.0])
            .unwrap();
        let bx = BlockPsi::boxed(vec![0.0], vec![0.0], vec![0.25]);
        let p = CompositeProblem::new(a, 1.0, vec![bx.clone(), bx]).unwrap();
        let opt = p.reference_optimum().unwrap();
        assert!((opt.x.as_slice()[0] - 0.25).abs() < 1e-10);
        assert!((opt.value - 0.125).abs() < 1e-10);
    }

    #[test]
    fn two_d_example_strong_convexity() {
        // f = (μ/2)(x¹)², Ψ = (μ/2)(x²)²: neither part is strongly convex, F is
        let mu = 3.0;
        let hess_f = DenseMatrix::diagonal(&[mu, 0.0]);
        let norms = BlockNorms::unit(BlockPartition::scalar(2).unwrap());
        let info = strong_convexity_from_parts(&hess_f, &[0.0, mu], &norms, &[1.0, 1.0]).unwrap();
        assert_eq!(info.mu_f, 0.0);
        assert_eq!(info.mu_psi, 0.0);
        assert!((info.mu_big_f - mu).abs() < 1e-10);
    }

    #[test]
    fn identity_strong_convexity() {
        let p = CompositeProblem::feasibility(eye(3, vec![1.0, 1.0, 1.0]), 1.0).unwrap();
        let info = p.strong_convexity_constants(&[1.0; 3]).unwrap();
        assert!((info.mu_f - 1.0).abs() < 1e-10);
        assert!((info.mu_big_f - 1.0).abs() < 1e-10);
        assert_eq!(info.mu_psi, 0.0);
    }

    #[test]
    fn rescaling_divides_constants() {
        let a = BlockMatrix::from_dense(
            3,
            BlockPartition::scalar(2).unwrap(),
            &[1.0, 0.5, 0.2, 1.0, 0.0, 0.3],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let p = CompositeProblem::new(a, 2.0, vec![BlockPsi::quadratic(1, 0.5), BlockPsi::quadratic(1, 0.25)])
            .unwrap();
        let w = [1.5, 0.5];
        let t = 4.0;
        let base = p.strong_convexity_constants(&w).unwrap();
        let scaled = p.strong_convexity_constants(&[w[0] * t, w[1] * t]).unwrap();
        let expected = base.rescaled(t);
        assert!((scaled.mu_big_f - expected.mu_big_f).abs() < 1e-10 * base.mu_big_f);
        assert!((scaled.mu_f - expected.mu_f).abs() < 1e-10 * base.mu_f);
        assert!((scaled.mu_psi - expected.mu_psi).abs() < 1e-12);
        assert!(base.mu_big_f >= base.mu_f + base.mu_psi - 1e-12);
    }

    #[test]
    fn box_quadratic_model() {
        let h = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let psi = BlockPsi::boxed(vec![0.0, 0.0], vec![-1.0, -1.0], vec![1.0, 0.1]);
        let x = [0.0, 0.0];
        let g = [-1.0, -1.0];
        let hsol = psi.solve_quadratic_model(&x, &g, &h, None, 0).unwrap();
        // KKT: second coordinate at upper bound 0.1, first solves 2h₁ + 0.05 = 1
        assert!((hsol[1] - 0.1).abs() < 1e-12);
        assert!((hsol[0] - 0.475).abs() < 1e-10);
    }
}
