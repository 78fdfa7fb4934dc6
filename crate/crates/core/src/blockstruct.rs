//! Block-partitioned sparse matrices and vectors, the separable block norm
//! and block Lipschitz constants of the quadratic penalty.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Cholesky, DenseMatrix};
use crate::math;
use crate::{Error, Result};

/// Relative tolerance of the power iteration used for block Lipschitz
/// constants.
pub const LIPSCHITZ_TOL: f64 = 1e-10;

/// Column partition `N = N_1 + … + N_n`. Cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    offsets: Arc<[usize]>,
}

impl BlockPartition {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("block {i} has size 0")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        let mut acc = 0usize;
        for &s in sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(Self {
            offsets: offsets.into(),
        })
    }

    /// `n` blocks of width one.
    pub fn scalar(n: usize) -> Result<Self> {
        Self::new(&vec![1; n])
    }

    /// `n` blocks of equal width.
    pub fn uniform(n: usize, width: usize) -> Result<Self> {
        Self::new(&vec![width; n])
    }

    /// Number of blocks `n`.
    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Total dimension `N`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    #[inline]
    pub fn size(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    #[inline]
    pub fn range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.num_blocks()).map(|i| self.size(i)).collect()
    }

    pub fn max_block_size(&self) -> usize {
        (0..self.num_blocks()).map(|i| self.size(i)).max().unwrap_or(0)
    }

    /// Block containing global column `col`.
    pub fn block_of(&self, col: usize) -> Option<usize> {
        if col >= self.dim() {
            return None;
        }
        // offsets is strictly increasing
        match self.offsets.binary_search(&col) {
            Ok(i) => Some(i),
            Err(i) => Some(i - 1),
        }
    }

    pub(crate) fn check_block(&self, i: usize) -> Result<()> {
        if i >= self.num_blocks() {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.num_blocks(),
            })
        } else {
            Ok(())
        }
    }
}

/// A dense vector together with the partition that splits it into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    partition: BlockPartition,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn new(partition: BlockPartition, data: Vec<f64>) -> Result<Self> {
        if data.len() != partition.dim() {
            return Err(Error::DimensionMismatch {
                expected: partition.dim(),
                found: data.len(),
            });
        }
        Ok(Self { partition, data })
    }

    pub fn zeros(partition: BlockPartition) -> Self {
        let n = partition.dim();
        Self {
            partition,
            data: vec![0.0; n],
        }
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.partition.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.partition.range(i);
        &mut self.data[r]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.data)
    }
}

/// Sparse `m × N` matrix in compressed-column form. Columns are stored in
/// global order, so the columns of block `i` form one contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    rows: usize,
    partition: BlockPartition,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    rhs: Vec<f64>,
}

impl BlockMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// entries equal to zero are dropped, so every stored entry is a
    /// structural nonzero.
    pub fn from_triplets(
        rows: usize,
        partition: BlockPartition,
        triplets: &[(usize, usize, f64)],
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let cols = partition.dim();
        if rhs.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: rhs.len(),
            });
        }
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::EntryOutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("matrix entry ({r}, {c})")));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.1, t.0));

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (r, c, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == r && sorted[k].1 == c {
                v += sorted[k].2;
                k += 1;
            }
            if v != 0.0 {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            rows,
            partition,
            col_ptr,
            row_idx,
            values,
            rhs,
        })
    }

    /// Builds from a dense row-major `rows × N` array.
    pub fn from_dense(
        rows: usize,
        partition: BlockPartition,
        dense: &[f64],
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let cols = partition.dim();
        if dense.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: dense.len(),
            });
        }
        let mut t = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = dense[r * cols + c];
                if v != 0.0 {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows, partition, &t, rhs)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.partition.dim()
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Replaces the right-hand side.
    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: rhs.len(),
            });
        }
        self.rhs = rhs;
        Ok(self)
    }

    /// Column submatrix `A_i = A U_i`, as an O(1) view.
    pub fn block(&self, i: usize) -> Result<BlockView<'_>> {
        self.partition.check_block(i)?;
        Ok(self.block_unchecked(i))
    }

    #[inline]
    pub(crate) fn block_unchecked(&self, i: usize) -> BlockView<'_> {
        let range = self.partition.range(i);
        BlockView {
            rows: self.rows,
            col_ptr: &self.col_ptr[range.start..=range.end],
            row_idx: &self.row_idx,
            values: &self.values,
        }
    }

    /// Entries `(row, value)` of global column `c`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.col_ptr[c], self.col_ptr[c + 1]);
        self.row_idx[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    /// All stored entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols()).flat_map(move |c| self.column(c).map(move |(r, v)| (r, c, v)))
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// `Aᵀ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        (0..self.cols())
            .map(|c| {
                (self.col_ptr[c]..self.col_ptr[c + 1])
                    .map(|k| self.values[k] * y[self.row_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// Dense row-major copy (tests and small instances only).
    pub fn to_dense(&self) -> Vec<f64> {
        let cols = self.cols();
        let mut d = vec![0.0; self.rows * cols];
        for (r, c, v) in self.triplets() {
            d[r * cols + c] = v;
        }
        d
    }

    /// Blocks whose column submatrix is entirely zero.
    pub fn zero_blocks(&self) -> Vec<usize> {
        (0..self.num_blocks())
            .filter(|&i| self.block_unchecked(i).nnz() == 0)
            .collect()
    }

    /// Rejects matrices with an all-zero block.
    pub fn validate_no_zero_blocks(&self) -> Result<()> {
        match self.zero_blocks().first() {
            Some(&block) => Err(Error::ZeroBlock { block }),
            None => Ok(()),
        }
    }
}

/// Read-only view of the column block `A_i`.
#[derive(Debug, Clone, Copy)]
pub struct BlockView<'a> {
    rows: usize,
    col_ptr: &'a [usize],
    row_idx: &'a [usize],
    values: &'a [f64],
}

impl<'a> BlockView<'a> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_ptr[self.col_ptr.len() - 1] - self.col_ptr[0]
    }

    /// Entries `(row, value)` of local column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    /// `A_iᵀ v`.
    pub fn tr_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols())
            .map(|j| self.column(j).map(|(r, a)| a * v[r]).sum())
            .collect()
    }

    /// `out ← out + alpha · A_i h`.
    pub fn mul_add(&self, alpha: f64, h: &[f64], out: &mut [f64]) {
        for (j, &hj) in h.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            for (r, a) in self.column(j) {
                out[r] += alpha * a * hj;
            }
        }
    }

    /// `A_i h` as a dense `m`-vector.
    pub fn mul(&self, h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_add(1.0, h, &mut out);
        out
    }

    /// Gram matrix `A_iᵀ A_i`.
    pub fn gram(&self) -> DenseMatrix {
        let k = self.cols();
        let mut g = DenseMatrix::zeros(k, k);
        let mut dense_col = vec![0.0; self.rows];
        for j in 0..k {
            for (r, a) in self.column(j) {
                dense_col[r] = a;
            }
            for l in j..k {
                let s: f64 = self.column(l).map(|(r, a)| a * dense_col[r]).sum();
                g[(j, l)] = s;
                g[(l, j)] = s;
            }
            for (r, _) in self.column(j) {
                dense_col[r] = 0.0;
            }
        }
        g
    }

    /// Rows of `A_i` holding at least one stored entry, ascending.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.cols())
            .flat_map(|j| self.column(j).map(|(r, _)| r))
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let k = self.cols();
        let mut d = vec![0.0; self.rows * k];
        for j in 0..k {
            for (r, a) in self.column(j) {
                d[r * k + j] = a;
            }
        }
        d
    }
}

/// An SPD block metric `B_i` with its Cholesky factor and largest
/// eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: DenseMatrix,
    chol: Cholesky,
    lambda_max: f64,
}

impl SpdMatrix {
    /// Verifies symmetry (to 1e-12) and positive definiteness.
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_symmetric(1e-12) {
            return Err(Error::NotPositiveDefinite {
                what: "block metric (not symmetric)".into(),
            });
        }
        let chol = Cholesky::factor(&matrix, 1e-14)?;
        let n = matrix.rows();
        let lambda_max = linalg::largest_eigenvalue(&matrix, 1e-12, 100 * n.max(100)).value;
        Ok(Self {
            matrix,
            chol,
            lambda_max,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }
}

/// Block metric `B_i` defining `‖t‖_(i) = ⟨B_i t, t⟩^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockMetric {
    Identity,
    Matrix(SpdMatrix),
}

impl BlockMetric {
    pub fn quad(&self, t: &[f64]) -> f64 {
        match self {
            BlockMetric::Identity => linalg::dot(t, t),
            BlockMetric::Matrix(b) => b.matrix.quad_form(t),
        }
    }

    pub fn apply(&self, t: &[f64]) -> Vec<f64> {
        match self {
            BlockMetric::Identity => t.to_vec(),
            BlockMetric::Matrix(b) => b.matrix.mul_vec(t),
        }
    }

    /// `B_i⁻¹ t`.
    pub fn solve(&self, t: &[f64]) -> Vec<f64> {
        match self {
            BlockMetric::Identity => t.to_vec(),
            BlockMetric::Matrix(b) => b.chol.solve(t),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        match self {
            BlockMetric::Identity => 1.0,
            BlockMetric::Matrix(b) => b.lambda_max,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, BlockMetric::Identity)
    }

    /// Dense `k × k` form.
    pub fn to_dense(&self, k: usize) -> DenseMatrix {
        match self {
            BlockMetric::Identity => DenseMatrix::identity(k),
            BlockMetric::Matrix(b) => b.matrix.clone(),
        }
    }
}

/// Block metrics `B_1..B_n` and positive weights `w_1..w_n` of the
/// separable norm `‖x‖_w = (Σ_i w_i ⟨B_i x^(i), x^(i)⟩)^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorms {
    partition: BlockPartition,
    metrics: Vec<BlockMetric>,
    weights: Vec<f64>,
}

impl BlockNorms {
    /// `B_i = I`, `w_i = 1`.
    pub fn unit(partition: BlockPartition) -> Self {
        let n = partition.num_blocks();
        Self {
            partition,
            metrics: vec![BlockMetric::Identity; n],
            weights: vec![1.0; n],
        }
    }

    pub fn new(
        partition: BlockPartition,
        metrics: Vec<BlockMetric>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = partition.num_blocks();
        if metrics.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: metrics.len(),
            });
        }
        for (i, m) in metrics.iter().enumerate() {
            if let BlockMetric::Matrix(b) = m {
                if b.matrix.rows() != partition.size(i) {
                    return Err(Error::DimensionMismatch {
                        expected: partition.size(i),
                        found: b.matrix.rows(),
                    });
                }
            }
        }
        let norms = Self {
            partition,
            metrics,
            weights: vec![1.0; n],
        };
        norms.with_weights(weights)
    }

    /// `B_i = r·A_iᵀA_i`, accepted only when every Gram block is SPD with
    /// smallest eigenvalue above 1e-12. Under this metric `L_i = 1`.
    pub fn hessian_blocks(a: &BlockMatrix, r: f64) -> Result<Self> {
        let n = a.num_blocks();
        let mut metrics = Vec::with_capacity(n);
        for i in 0..n {
            let g = a.block_unchecked(i).gram().scaled(r);
            let k = g.rows();
            let smallest = linalg::smallest_generalized_eigenvalue(
                &g,
                |v, o| o.copy_from_slice(v),
                1e-12,
                100 * k.max(100),
            )?
            .value;
            if !(smallest > 1e-12) {
                return Err(Error::NotPositiveDefinite {
                    what: format!("r·A_iᵀA_i for block {i} (smallest eigenvalue {smallest:e})"),
                });
            }
            metrics.push(BlockMetric::Matrix(SpdMatrix::new(g)?));
        }
        Self::new(a.partition().clone(), metrics, vec![1.0; n])
    }

    /// Same metrics, new weights.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.partition.num_blocks() {
            return Err(Error::DimensionMismatch {
                expected: self.partition.num_blocks(),
                found: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight w_{i} = {} must be positive",
                weights[i]
            )));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn metric(&self, i: usize) -> &BlockMetric {
        &self.metrics[i]
    }

    pub fn metrics(&self) -> &[BlockMetric] {
        &self.metrics
    }

    pub fn all_identity(&self) -> bool {
        self.metrics.iter().all(BlockMetric::is_identity)
    }

    /// `‖x‖_w²`.
    pub fn weighted_norm_sq(&self, x: &[f64]) -> f64 {
        (0..self.partition.num_blocks())
            .map(|i| self.weights[i] * self.metrics[i].quad(&x[self.partition.range(i)]))
            .sum()
    }
}

/// `‖x‖_w = (Σ_i w_i ⟨B_i x^(i), x^(i)⟩)^{1/2}`.
pub fn weighted_norm(x: &BlockVector, norms: &BlockNorms) -> Result<f64> {
    if x.partition() != norms.partition() {
        return Err(Error::PartitionMismatch);
    }
    Ok(math::sqrt(norms.weighted_norm_sq(x.as_slice())))
}

/// `b − A x`.
pub fn residual(a: &BlockMatrix, x: &BlockVector) -> Result<Vec<f64>> {
    if x.as_slice().len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: x.as_slice().len(),
        });
    }
    if x.partition() != a.partition() {
        return Err(Error::PartitionMismatch);
    }
    let ax = a.mul_vec(x.as_slice());
    Ok(a.rhs().iter().zip(&ax).map(|(b, v)| b - v).collect())
}

/// Block Lipschitz constants with the blocks whose `A_i` is zero flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLipschitz {
    pub constants: Vec<f64>,
    pub zero_blocks: Vec<usize>,
}

impl BlockLipschitz {
    /// The constants, or an error if any block is zero.
    pub fn require_positive(self) -> Result<Vec<f64>> {
        match self.zero_blocks.first() {
            Some(&block) => Err(Error::ZeroBlock { block }),
            None => Ok(self.constants),
        }
    }

    pub fn max(&self) -> f64 {
        self.constants.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.constants.iter().sum::<f64>() / self.constants.len() as f64
    }
}

/// Iteration cap of the block power iteration. The per-block `10·N_i` cap
/// alone is too small for blocks with clustered top eigenvalues.
pub fn lipschitz_iteration_cap(block_size: usize) -> usize {
    (10 * block_size).max(10_000)
}

/// `L_i`: the largest eigenvalue of `r·A_iᵀA_i` relative to `B_i`.
pub fn block_lipschitz_constants(
    a: &BlockMatrix,
    r: f64,
    norms: &BlockNorms,
) -> Result<BlockLipschitz> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("penalty r = {r} must be positive")));
    }
    if norms.partition() != a.partition() {
        return Err(Error::PartitionMismatch);
    }
    let n = a.num_blocks();
    let mut constants = Vec::with_capacity(n);
    let mut zero_blocks = Vec::new();
    for i in 0..n {
        let view = a.block_unchecked(i);
        if view.nnz() == 0 {
            constants.push(0.0);
            zero_blocks.push(i);
            continue;
        }
        let k = view.cols();
        let metric = norms.metric(i);
        if k == 1 && metric.is_identity() {
            let s: f64 = view.column(0).map(|(_, v)| v * v).sum();
            constants.push(r * s);
            continue;
        }
        let apply_m = |v: &[f64], out: &mut [f64]| {
            let av = view.mul(v);
            for (o, t) in out.iter_mut().zip(view.tr_mul(&av)) {
                *o = r * t;
            }
        };
        let est = match metric {
            BlockMetric::Identity => linalg::generalized_power_iteration(
                k,
                apply_m,
                |v, out| out.copy_from_slice(v),
                |_| {},
                LIPSCHITZ_TOL,
                lipschitz_iteration_cap(k),
            ),
            BlockMetric::Matrix(b) => linalg::generalized_power_iteration(
                k,
                apply_m,
                |v, out| out.copy_from_slice(&b.matrix.mul_vec(v)),
                |x| b.chol.solve_in_place(x),
                LIPSCHITZ_TOL,
                lipschitz_iteration_cap(k),
            ),
        };
        if !est.converged {
            return Err(Error::NonConvergence {
                what: format!("power iteration for L_{i}"),
                iterations: est.iterations,
            });
        }
        constants.push(est.value);
    }
    Ok(BlockLipschitz {
        constants,
        zero_blocks,
    })
}

impl core::fmt::Display for BlockPartition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let sizes: Vec<_> = self.sizes().iter().map(ToString::to_string).collect();
        write!(f, "[{}]", sizes.join(","))
    }
}
