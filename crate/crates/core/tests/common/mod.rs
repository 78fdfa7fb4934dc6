#![allow(dead_code)]

use augdecomp_core::{BlockMatrix, BlockPartition, BlockPsi, BlockVector, CompositeProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn nonzero(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..1.0);
        if v.abs() > 1e-3 {
            return v;
        }
    }
}

/// Random block sizes in `1..=max_size`.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, max_size: usize) -> BlockPartition {
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_size)).collect();
    BlockPartition::new(&sizes).unwrap()
}

/// Random blocked matrix with `ω` exactly `omega`.
///
/// One row per column holds a single entry in that column (so `A` has full
/// column rank), followed by `coupling` rows each touching a random number
/// of blocks in `1..=omega`; the first coupling row touches exactly `omega`.
pub fn random_matrix(
    rng: &mut ChaCha8Rng,
    partition: BlockPartition,
    omega: usize,
    coupling: usize,
) -> BlockMatrix {
    let n = partition.num_blocks();
    assert!(omega >= 1 && omega <= n);
    let dim = partition.dim();
    let mut t = Vec::new();
    let mut row = 0;
    for c in 0..dim {
        t.push((row, c, nonzero(rng)));
        row += 1;
    }
    for k in 0..coupling.max(1) {
        let touch = if k == 0 { omega } else { rng.random_range(1..=omega) };
        for i in pick(rng, n, touch) {
            let range = partition.range(i);
            let c = rng.random_range(range.clone());
            t.push((row, c, nonzero(rng)));
            // occasionally a second column of the same block
            if range.len() > 1 && rng.random_bool(0.3) {
                let c2 = rng.random_range(range);
                if c2 != c {
                    t.push((row, c2, nonzero(rng)));
                }
            }
        }
        row += 1;
    }
    let rhs: Vec<f64> = (0..row).map(|_| rng.random_range(-2.0..2.0)).collect();
    BlockMatrix::from_triplets(row, partition, &t, rhs).unwrap()
}

/// `k` distinct indices from `0..n`.
pub fn pick(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    for j in 0..k {
        let s = rng.random_range(j..n);
        all.swap(j, s);
    }
    all.truncate(k);
    all
}

/// Random matrix with no structural guarantees beyond nonzero columns.
pub fn random_sparse(
    rng: &mut ChaCha8Rng,
    partition: BlockPartition,
    rows: usize,
    density: f64,
) -> BlockMatrix {
    let dim = partition.dim();
    let mut t = Vec::new();
    for c in 0..dim {
        t.push((rng.random_range(0..rows), c, nonzero(rng)));
        for r in 0..rows {
            if rng.random_bool(density) {
                t.push((r, c, nonzero(rng)));
            }
        }
    }
    let rhs: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    BlockMatrix::from_triplets(rows, partition, &t, rhs).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, partition: &BlockPartition, scale: f64) -> BlockVector {
    let data = (0..partition.dim()).map(|_| rng.random_range(-scale..scale)).collect();
    BlockVector::new(partition.clone(), data).unwrap()
}

pub fn quadratic_psi(rng: &mut ChaCha8Rng, partition: &BlockPartition, mu_lo: f64, mu_hi: f64) -> Vec<BlockPsi> {
    (0..partition.num_blocks())
        .map(|i| BlockPsi::LinearQuadratic {
            c: (0..partition.size(i)).map(|_| rng.random_range(-1.0..1.0)).collect(),
            mu: rng.random_range(mu_lo..mu_hi),
        })
        .collect()
}

pub fn box_psi(rng: &mut ChaCha8Rng, partition: &BlockPartition) -> Vec<BlockPsi> {
    (0..partition.num_blocks())
        .map(|i| {
            let k = partition.size(i);
            let lo: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..0.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.1..2.0)).collect();
            BlockPsi::boxed((0..k).map(|_| rng.random_range(-0.5..0.5)).collect(), lo, hi)
        })
        .collect()
}

/// Strongly convex instance: full-rank `A` and quadratic `Ψ`.
pub fn strongly_convex(seed: u64, n: usize, omega: usize) -> CompositeProblem {
    let mut r = rng(seed);
    let part = random_partition(&mut r, n, 3);
    let a = random_matrix(&mut r, part.clone(), omega, 2 * n);
    let psi = quadratic_psi(&mut r, &part, 0.05, 0.5);
    CompositeProblem::new(a, 1.0, psi).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn nalgebra_dense(rows: usize, cols: usize, data: &[f64]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(rows, cols, data)
}
