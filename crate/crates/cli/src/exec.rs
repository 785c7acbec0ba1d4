//! Thread-pool executor honoring the index-ordered aggregation contract.

use moduli_core::Executor;
use rayon::prelude::*;

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "MODULI_JOBS";

pub struct Rayon {
    pool: rayon::ThreadPool,
}

impl Rayon {
    /// A pool with `jobs` workers; 0 means one per available core.
    pub fn new(jobs: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Rayon { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}
