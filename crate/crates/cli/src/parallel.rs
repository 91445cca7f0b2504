use replimut_core::branching::{Mapper, SweepPoint};
use rayon::prelude::*;

/// Runs sweep points on a rayon pool of fixed size.
pub struct RayonMapper {
    pool: rayon::ThreadPool,
}

impl RayonMapper {
    pub fn new(jobs: usize) -> RayonMapper {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("thread pool");
        RayonMapper { pool }
    }
}

impl Mapper for RayonMapper {
    fn map(&self, sigmas: &[f64], job: &(dyn Fn(f64) -> SweepPoint + Sync)) -> Vec<SweepPoint> {
        self.pool.install(|| sigmas.par_iter().map(|&s| job(s)).collect())
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
