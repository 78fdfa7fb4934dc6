//! Separability measures of the quadratic penalty `f(x) = (r/2)‖b − Ax‖²`
//! with respect to the column-block structure of `A`.
//!
//! * the degree of partial separability `ω = max_j ω_j`, where `ω_j` counts
//!   the blocks with a nonzero in row `j`;
//! * Ruszczyński's "number of neighbors" `ω_R`, computed by brute force
//!   from the row-indicator matrices `E^i`.
//!
//! For every nonzero `A` the two satisfy `ω = ω_R + 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::blockstruct::BlockMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparabilityReport {
    pub omega: usize,
    pub omega_r: usize,
    /// `ω_j` for each row `j`.
    pub per_row: Vec<usize>,
}

impl SeparabilityReport {
    /// `hist[k]` = number of rows touching exactly `k` blocks, `k = 0..=ω`.
    pub fn per_row_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.omega + 1];
        for &w in &self.per_row {
            hist[w] += 1;
        }
        hist
    }
}

/// `ω_j = |{i : row j of A_i has a nonzero}|` for every row.
pub fn row_block_counts(a: &BlockMatrix) -> Vec<usize> {
    let mut counts = vec![0usize; a.rows()];
    for i in 0..a.num_blocks() {
        for r in a.block_unchecked(i).nonzero_rows() {
            counts[r] += 1;
        }
    }
    counts
}

fn require_nonzero(a: &BlockMatrix) -> Result<()> {
    if a.nnz() == 0 {
        Err(Error::ZeroMatrix)
    } else {
        Ok(())
    }
}

/// Degree of partial separability `ω` of the quadratic penalty.
pub fn partial_separability_degree(a: &BlockMatrix) -> Result<usize> {
    require_nonzero(a)?;
    Ok(row_block_counts(a).into_iter().max().unwrap_or(0))
}

/// Ruszczyński's measure `ω_R = max_{(i,u)} |V(i,u)|`, where `V(i,u)` holds
/// the pairs `(i', u')`, `i' ≠ i`, whose indicator column `E^{i'}_{u'}`
/// overlaps `E^i_u`.
///
/// Quadratic in the total number of nonzero block rows; intended as an
/// oracle, not for the solver path.
pub fn ruszczynski_degree(a: &BlockMatrix) -> Result<usize> {
    require_nonzero(a)?;
    let m = a.rows();
    // E^i: one indicator column per nonzero row of A_i, in row order.
    let indicators: Vec<Vec<Vec<u8>>> = (0..a.num_blocks())
        .map(|i| {
            a.block_unchecked(i)
                .nonzero_rows()
                .into_iter()
                .map(|j| {
                    let mut col = vec![0u8; m];
                    col[j] = 1;
                    col
                })
                .collect()
        })
        .collect();
    let overlaps = |p: &[u8], q: &[u8]| p.iter().zip(q).any(|(x, y)| x * y != 0);

    let mut best = 0usize;
    for (i, e_i) in indicators.iter().enumerate() {
        for col_u in e_i {
            let mut neighbors = 0usize;
            for (i2, e_i2) in indicators.iter().enumerate() {
                if i2 == i {
                    continue;
                }
                neighbors += e_i2.iter().filter(|col| overlaps(col_u, col)).count();
            }
            best = best.max(neighbors);
        }
    }
    Ok(best)
}

/// Both measures and the per-row counts.
pub fn separability_report(a: &BlockMatrix) -> Result<SeparabilityReport> {
    let omega = partial_separability_degree(a)?;
    let omega_r = ruszczynski_degree(a)?;
    Ok(SeparabilityReport {
        omega,
        omega_r,
        per_row: row_block_counts(a),
    })
}

/// One summand `(r/2)(b_j − Σ_i A_{ji} x^(i))²` of the row decomposition of
/// `f`. It depends only on the blocks in `blocks`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSummand {
    pub row: usize,
    /// Touched blocks `J_j`, ascending.
    pub blocks: Vec<usize>,
    /// `(global column, value)` for the stored entries of the row.
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
    pub r: f64,
}

impl RowSummand {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = self.coefficients.iter().map(|&(c, v)| v * x[c]).sum();
        let d = self.rhs - s;
        0.5 * self.r * d * d
    }
}

/// Row decomposition certifying partial separability of degree `ω`:
/// `f(x) = Σ_j summand_j(x)` with `|J_j| ≤ ω`.
pub fn decompose_rows(a: &BlockMatrix, r: f64) -> Result<Vec<RowSummand>> {
    require_nonzero(a)?;
    let mut coeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); a.rows()];
    for (row, col, v) in a.triplets() {
        coeffs[row].push((col, v));
    }
    let partition = a.partition();
    Ok(coeffs
        .into_iter()
        .enumerate()
        .map(|(row, coefficients)| {
            let mut blocks: Vec<usize> = coefficients
                .iter()
                .filter_map(|&(c, _)| partition.block_of(c))
                .collect();
            blocks.sort_unstable();
            blocks.dedup();
            RowSummand {
                row,
                blocks,
                coefficients,
                rhs: a.rhs()[row],
                r,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstruct::BlockPartition;

    fn matrix(rows: usize, sizes: &[usize], dense: &[f64]) -> BlockMatrix {
        BlockMatrix::from_dense(
            rows,
            BlockPartition::new(sizes).unwrap(),
            dense,
            vec![1.0; rows],
        )
        .unwrap()
    }

    #[test]
    fn block_diagonal_is_fully_separable() {
        let a = matrix(3, &[1, 2], &[1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 3.0]);
        let rep = separability_report(&a).unwrap();
        assert_eq!(rep.omega, 1);
        assert_eq!(rep.omega_r, 0);
    }

    #[test]
    fn dense_row_touches_all_blocks() {
        let a = matrix(1, &[1, 1, 1, 1], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(partial_separability_degree(&a).unwrap(), 4);
        assert_eq!(ruszczynski_degree(&a).unwrap(), 3);
    }

    #[test]
    fn two_blocks_sharing_a_row() {
        let a = matrix(2, &[1, 1], &[1.0, 1.0, 1.0, 0.0]);
        assert_eq!(ruszczynski_degree(&a).unwrap(), 1);
        assert_eq!(partial_separability_degree(&a).unwrap(), 2);
    }

    #[test]
    fn block_counts_once_per_row() {
        // both columns of block 0 are nonzero in row 0
        let a = matrix(1, &[2, 1], &[1.0, 1.0, 0.0]);
        assert_eq!(partial_separability_degree(&a).unwrap(), 1);
        assert_eq!(ruszczynski_degree(&a).unwrap(), 0);
    }

    #[test]
    fn zero_matrix_errors() {
        let a = matrix(2, &[1, 1], &[0.0; 4]);
        assert_eq!(partial_separability_degree(&a), Err(Error::ZeroMatrix));
        assert_eq!(ruszczynski_degree(&a), Err(Error::ZeroMatrix));
        assert!(decompose_rows(&a, 1.0).is_err());
    }

    #[test]
    fn single_row_single_block_summand_is_f() {
        let a = matrix(1, &[2], &[1.0, -2.0]);
        let s = decompose_rows(&a, 3.0).unwrap();
        assert_eq!(s.len(), 1);
        let x = [0.5, 0.25];
        let f = 1.5 * (1.0f64 - (0.5 - 0.5)).powi(2);
        assert!((s[0].eval(&x) - f).abs() < 1e-15);
    }

    #[test]
    fn histogram() {
        let a = matrix(3, &[1, 1], &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let rep = separability_report(&a).unwrap();
        assert_eq!(rep.per_row, vec![2, 1, 0]);
        assert_eq!(rep.per_row_histogram(), vec![1, 1, 1]);
    }
}
