//! τ-nice block samplings: every draw is a uniformly random subset of
//! exactly τ of the n blocks.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Reproducible τ-nice sampler over blocks `0..n`.
///
/// The stream is a ChaCha8 generator seeded from `seed`, so a given
/// `(n, τ, seed)` produces the same draws on every platform.
#[derive(Debug, Clone)]
pub struct TauNiceSampler {
    n: usize,
    tau: usize,
    seed: u64,
    rng: ChaCha8Rng,
    perm: Vec<usize>,
}

impl TauNiceSampler {
    pub fn new(n: usize, tau: usize, seed: u64) -> Result<Self> {
        if n == 0 || tau == 0 || tau > n {
            return Err(Error::InvalidParameter(format!(
                "τ-nice sampling needs 1 ≤ τ ≤ n, got τ = {tau}, n = {n}"
            )));
        }
        Ok(Self {
            n,
            tau,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            perm: (0..n).collect(),
        })
    }

    /// Independent stream `stream` of the same seed.
    pub fn with_stream(n: usize, tau: usize, seed: u64, stream: u64) -> Result<Self> {
        let mut s = Self::new(n, tau, seed)?;
        s.rng.set_stream(stream);
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next subset, sorted ascending.
    ///
    /// Partial Fisher-Yates over a persistent permutation: the first τ
    /// positions after τ swaps are a uniform ordered τ-tuple whatever the
    /// permutation held before.
    pub fn draw(&mut self) -> Vec<usize> {
        if self.tau == self.n {
            return (0..self.n).collect();
        }
        for j in 0..self.tau {
            let k = self.rng.random_range(j..self.n);
            self.perm.swap(j, k);
        }
        let mut s = self.perm[..self.tau].to_vec();
        s.sort_unstable();
        s
    }

    /// `P(i ∈ Ŝ) = τ/n` for every block.
    pub fn inclusion_probability(&self, i: usize) -> Result<f64> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        Ok(self.tau as f64 / self.n as f64)
    }
}

/// Binomial coefficient as `u128`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    acc
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut j = k;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if idx[j] != j + n - k {
                break;
            }
            if j == 0 {
                return;
            }
        }
        if idx[j] == j + n - k {
            return;
        }
        idx[j] += 1;
        for l in (j + 1)..k {
            idx[l] = idx[l - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn full_sampling_is_everything() {
        let mut s = TauNiceSampler::new(5, 5, 1).unwrap();
        for _ in 0..10 {
            assert_eq!(s.draw(), vec![0, 1, 2, 3, 4]);
        }
        assert_eq!(s.inclusion_probability(3).unwrap(), 1.0);
    }

    #[test]
    fn draws_are_distinct_and_sized() {
        let mut s = TauNiceSampler::new(10, 3, 42).unwrap();
        for _ in 0..1000 {
            let d = s.draw();
            assert_eq!(d.len(), 3);
            assert!(d.windows(2).all(|w| w[0] < w[1]));
            assert!(d.iter().all(|&i| i < 10));
        }
        assert_eq!(s.inclusion_probability(2).unwrap(), 0.3);
        assert!(s.inclusion_probability(10).is_err());
    }

    #[test]
    fn invalid_tau() {
        assert!(TauNiceSampler::new(3, 0, 0).is_err());
        assert!(TauNiceSampler::new(3, 4, 0).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = TauNiceSampler::new(20, 4, 9).unwrap();
        let mut b = TauNiceSampler::new(20, 4, 9).unwrap();
        for _ in 0..100 {
            assert_eq!(a.draw(), b.draw());
        }
    }

    #[test]
    fn subsets_enumerated() {
        let mut seen = Vec::new();
        for_each_subset(5, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[9], vec![3, 4]);
        let mut count = 0;
        for_each_subset(4, 4, |_| count += 1);
        assert_eq!(count, 1);
        let mut count = 0;
        for_each_subset(4, 0, |s| {
            assert!(s.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(3, 5), 0);
    }
}
