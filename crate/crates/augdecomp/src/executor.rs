//! Thread-pool block executor and a wall clock for the solver harness.

use std::time::Instant;

use augdecomp_core::solvers::{BlockExecutor, BlockTask, Stopwatch};
use augdecomp_core::Result;
use rayon::prelude::*;

/// Evaluates block subproblems on a dedicated rayon pool.
///
/// Results come back in input order and the solver applies them in that
/// order, so traces are bit-identical to the serial executor for any
/// thread count.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> std::result::Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl BlockExecutor for RayonExecutor {
    fn map_blocks(&self, blocks: &[usize], task: &BlockTask<'_>) -> Vec<Result<Vec<f64>>> {
        self.pool
            .install(|| blocks.par_iter().map(|&i| task(i)).collect())
    }
}

/// Milliseconds since construction.
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Stopwatch for WallClock {
    fn now_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}
