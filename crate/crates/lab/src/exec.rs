use rayon::prelude::*;

use obstruction_core::functional::Executor;
use obstruction_core::Result;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "OBSTRUCTION_LAB_THREADS";

/// A rayon pool. Results keep index order, so reductions over them do not
/// depend on the thread count.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> Pool {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .expect("thread pool");
        Pool { pool }
    }

    /// Pool sized by `OBSTRUCTION_LAB_THREADS`, else by the available cores.
    pub fn from_env() -> std::result::Result<Pool, String> {
        let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let threads = match std::env::var(THREADS_VAR) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(k) if k > 0 => k.min(cores),
                _ => return Err(format!("{} must be a positive integer, got `{}`", THREADS_VAR, v)),
            },
            Err(_) => cores,
        };
        Ok(Pool::new(threads))
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, len: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}
