use gamehomog_core::homog::Executor;
use rayon::prelude::*;

/// A dedicated rayon pool. Results come back in index order, so a campaign
/// does not depend on the number of threads.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `None` lets rayon pick (one thread per core).
    pub fn new(workers: Option<usize>) -> Self {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            b = b.num_threads(n);
        }
        Self {
            pool: b.build().expect("thread pool"),
        }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T: Send>(&self, n: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(job).collect())
    }
}
