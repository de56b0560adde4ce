//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these run on a rayon pool; without it they
//! iterate in order on the calling thread. Results are always returned in
//! input order, so callers never observe scheduling.

/// Number of logical cores, used as the default parallelism.
pub fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Maps `f` over `0..len` and collects results in index order.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// A bounded worker pool. `parallelism` caps the number of jobs in flight.
pub struct Pool {
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
    parallelism: usize,
}

impl std::fmt::Debug for Pool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pool")
            .field("parallelism", &self.parallelism)
            .finish()
    }
}

impl Pool {
    pub fn new(parallelism: usize) -> Self {
        let parallelism = parallelism.max(1);
        #[cfg(feature = "parallel")]
        {
            let inner = if parallelism > 1 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(parallelism)
                    .thread_name(|i| format!("vf-pool-{i}"))
                    .build()
                    .ok()
            } else {
                None
            };
            Pool { inner, parallelism }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Pool { parallelism }
        }
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
    }

    /// Runs `f` on every item; output order matches input order.
    pub fn map<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if let Some(pool) = &self.inner {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
        items.iter().map(f).collect()
    }
}
