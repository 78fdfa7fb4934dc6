//! Reproducible random instances.
//!
//! * Block angular: `A = [diag(C_1, …, C_n); D_1 … D_n]` with exactly `ω`
//!   nonzero `D_i`, each touching the first linking row, so the degree of
//!   partial separability is exactly `ω`.
//! * Bounded row: scalar blocks and at most `ω` nonzeros per row, with the
//!   first row holding exactly `ω`.
//!
//! Nonzero values are uniform on `[−1, 1]` (zero excluded). The right-hand
//! side is `A x_true` for a standard normal `x_true` by default.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blockstruct::{BlockMatrix, BlockPartition};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::{Error, Result};

/// Attempts per block before a block angular spec is declared infeasible.
const MAX_BLOCK_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RhsMode {
    /// `b = A x_true`, `x_true` standard normal; the system is consistent.
    Feasible,
    /// `b` standard normal.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockAngularSpec {
    pub n: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    pub c_density: f64,
    /// Density of an active `D_i` within the linking rows.
    pub d_density: f64,
    /// Number of nonzero `D_i`; 1 means `D = 0`.
    pub omega: usize,
    pub linking_rows: usize,
    pub rhs: RhsMode,
    pub seed: u64,
}

impl BlockAngularSpec {
    /// `n` blocks of `15 × 10` C-blocks at 30% density, one dense linking row.
    pub fn desk(n: usize, omega: usize, seed: u64) -> Self {
        Self {
            n,
            block_rows: 15,
            block_cols: 10,
            c_density: 0.3,
            d_density: 1.0,
            omega,
            linking_rows: 1,
            rhs: RhsMode::Feasible,
            seed,
        }
    }

    /// 100 blocks of `150 × 100` C-blocks at 10% density, one linking row.
    pub fn full_scale(omega: usize, seed: u64) -> Self {
        Self {
            n: 100,
            block_rows: 150,
            block_cols: 100,
            c_density: 0.1,
            ..Self::desk(100, omega, seed)
        }
    }

    pub fn rows(&self) -> usize {
        self.n * self.block_rows + self.linking_rows
    }

    pub fn cols(&self) -> usize {
        self.n * self.block_cols
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundedRowSpec {
    pub rows: usize,
    pub cols: usize,
    pub omega: usize,
    pub rhs: RhsMode,
    pub seed: u64,
}

impl BoundedRowSpec {
    /// `2000 × 1000`.
    pub fn desk(omega: usize, seed: u64) -> Self {
        Self {
            rows: 2000,
            cols: 1000,
            omega,
            rhs: RhsMode::Feasible,
            seed,
        }
    }

    /// `20000 × 10000`.
    pub fn full_scale(omega: usize, seed: u64) -> Self {
        Self {
            rows: 20_000,
            cols: 10_000,
            ..Self::desk(omega, seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "kebab-case"))]
pub enum GeneratorSpec {
    BlockAngular(BlockAngularSpec),
    BoundedRow(BoundedRowSpec),
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<BlockMatrix> {
        match self {
            GeneratorSpec::BlockAngular(s) => gen_block_angular(s),
            GeneratorSpec::BoundedRow(s) => gen_bounded_row(s),
        }
    }

    pub fn omega(&self) -> usize {
        match self {
            GeneratorSpec::BlockAngular(s) => s.omega,
            GeneratorSpec::BoundedRow(s) => s.omega,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            GeneratorSpec::BlockAngular(s) => s.seed,
            GeneratorSpec::BoundedRow(s) => s.seed,
        }
    }
}

fn nonzero_value(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..=1.0);
        if v != 0.0 {
            return v;
        }
    }
}

/// Sorted uniform `k`-subset of `0..perm.len()`, reusing `perm` as scratch.
fn choose(rng: &mut ChaCha8Rng, perm: &mut [usize], k: usize) -> Vec<usize> {
    let n = perm.len();
    for j in 0..k {
        let t = rng.random_range(j..n);
        perm.swap(j, t);
    }
    let mut s = perm[..k].to_vec();
    s.sort_unstable();
    s
}

fn finish(
    rng: &mut ChaCha8Rng,
    rows: usize,
    partition: BlockPartition,
    triplets: &[(usize, usize, f64)],
    mode: RhsMode,
) -> Result<BlockMatrix> {
    let a = BlockMatrix::from_triplets(rows, partition, triplets, vec![0.0; rows])?;
    let rhs = match mode {
        RhsMode::Feasible => {
            let x: Vec<f64> = (0..a.cols()).map(|_| rng.sample(StandardNormal)).collect();
            a.mul_vec(&x)
        }
        RhsMode::Gaussian => (0..rows).map(|_| rng.sample(StandardNormal)).collect(),
    };
    a.with_rhs(rhs)
}

fn density_ok(d: f64) -> bool {
    d > 0.0 && d <= 1.0
}

pub fn gen_block_angular(spec: &BlockAngularSpec) -> Result<BlockMatrix> {
    let s = spec;
    if s.n == 0 || s.block_cols == 0 || s.block_rows == 0 {
        return Err(Error::InvalidParameter("block angular sizes must be positive".into()));
    }
    if s.omega == 0 || s.omega > s.n {
        return Err(Error::InvalidParameter(format!(
            "ω = {} must lie in 1..={}",
            s.omega, s.n
        )));
    }
    if !density_ok(s.c_density) || !density_ok(s.d_density) {
        return Err(Error::InvalidParameter(format!(
            "densities must lie in (0, 1], got C: {}, D: {}",
            s.c_density, s.d_density
        )));
    }
    if s.omega >= 2 && s.linking_rows == 0 {
        return Err(Error::InvalidParameter("ω ≥ 2 needs at least one linking row".into()));
    }
    if s.block_rows < s.block_cols {
        return Err(Error::InvalidParameter(format!(
            "C-blocks of size {} × {} cannot have full column rank",
            s.block_rows, s.block_cols
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let active = if s.omega == 1 {
        Vec::new()
    } else {
        let mut perm: Vec<usize> = (0..s.n).collect();
        choose(&mut rng, &mut perm, s.omega)
    };
    let partition = BlockPartition::uniform(s.n, s.block_cols)?;
    let link0 = s.n * s.block_rows;
    let mut triplets = Vec::new();
    let local_rows = s.block_rows + s.linking_rows;

    for i in 0..s.n {
        let has_d = active.binary_search(&i).is_ok();
        let mut accepted = None;
        for _ in 0..MAX_BLOCK_ATTEMPTS {
            // local (row, col, value); rows ≥ block_rows are linking rows
            let mut local: Vec<(usize, usize, f64)> = Vec::new();
            for c in 0..s.block_cols {
                let before = local.len();
                for r in 0..s.block_rows {
                    if rng.random::<f64>() < s.c_density {
                        local.push((r, c, nonzero_value(&mut rng)));
                    }
                }
                if local.len() == before {
                    let r = rng.random_range(0..s.block_rows);
                    local.push((r, c, nonzero_value(&mut rng)));
                }
            }
            if has_d {
                let mut first_row_hit = false;
                for l in 0..s.linking_rows {
                    for c in 0..s.block_cols {
                        if rng.random::<f64>() < s.d_density {
                            local.push((s.block_rows + l, c, nonzero_value(&mut rng)));
                            first_row_hit |= l == 0;
                        }
                    }
                }
                if !first_row_hit {
                    let c = rng.random_range(0..s.block_cols);
                    local.push((s.block_rows, c, nonzero_value(&mut rng)));
                }
            }
            let mut gram = DenseMatrix::zeros(s.block_cols, s.block_cols);
            let mut dense = vec![0.0; local_rows * s.block_cols];
            for &(r, c, v) in &local {
                dense[r * s.block_cols + c] = v;
            }
            for a in 0..s.block_cols {
                for b in 0..s.block_cols {
                    gram[(a, b)] = (0..local_rows)
                        .map(|r| dense[r * s.block_cols + a] * dense[r * s.block_cols + b])
                        .sum();
                }
            }
            if Cholesky::factor(&gram, 1e-10).is_ok() {
                accepted = Some(local);
                break;
            }
        }
        let local = accepted.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "could not draw a full-rank block {i} at density {} in {MAX_BLOCK_ATTEMPTS} attempts",
                s.c_density
            ))
        })?;
        let col0 = i * s.block_cols;
        for (r, c, v) in local {
            let row = if r < s.block_rows {
                i * s.block_rows + r
            } else {
                link0 + (r - s.block_rows)
            };
            triplets.push((row, col0 + c, v));
        }
    }
    finish(&mut rng, s.rows(), partition, &triplets, s.rhs)
}

pub fn gen_bounded_row(spec: &BoundedRowSpec) -> Result<BlockMatrix> {
    let s = spec;
    if s.rows == 0 || s.cols == 0 {
        return Err(Error::InvalidParameter("matrix sizes must be positive".into()));
    }
    if s.omega == 0 || s.omega > s.cols {
        return Err(Error::InvalidParameter(format!(
            "ω = {} must lie in 1..={}",
            s.omega, s.cols
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut perm: Vec<usize> = (0..s.cols).collect();
    let mut row_count = vec![0usize; s.rows];
    let mut col_used = vec![false; s.cols];
    let mut triplets = Vec::new();
    for (j, count) in row_count.iter_mut().enumerate() {
        let k = if j == 0 { s.omega } else { rng.random_range(1..=s.omega) };
        for c in choose(&mut rng, &mut perm, k) {
            triplets.push((j, c, nonzero_value(&mut rng)));
            col_used[c] = true;
        }
        *count = k;
    }
    // every column needs an entry; patch unused ones into unsaturated rows
    for c in 0..s.cols {
        if col_used[c] {
            continue;
        }
        let start = rng.random_range(0..s.rows);
        let row = (0..s.rows)
            .map(|t| (start + t) % s.rows)
            .find(|&r| row_count[r] < s.omega)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "{} rows with at most ω = {} entries cannot cover {} columns",
                    s.rows, s.omega, s.cols
                ))
            })?;
        triplets.push((row, c, nonzero_value(&mut rng)));
        row_count[row] += 1;
        col_used[c] = true;
    }
    let partition = BlockPartition::scalar(s.cols)?;
    finish(&mut rng, s.rows, partition, &triplets, s.rhs)
}
