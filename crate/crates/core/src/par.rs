//! Optional data parallelism.
//!
//! With the `parallel` feature (default) independent work items fan out over
//! the rayon pool; without it, or with [`Execution::Sequential`], they run in
//! order on the calling thread. Outputs are collected in index order either
//! way, so results are identical.

use std::env;

/// Environment variable capping the worker count of the global pool.
pub const THREADS_ENV: &str = "RESOLVE_RL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Applies `f` to `0..n` and collects the results in index order.
pub fn map_indexed<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Configures the global rayon pool from `RESOLVE_RL_THREADS`, if set.
///
/// Returns the configured worker count. Has no effect once the pool is
/// initialized, or when built without the `parallel` feature.
pub fn init_thread_pool_from_env() -> Option<usize> {
    let n = env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok()?;
    if n == 0 {
        return None;
    }
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Some(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: usize| (i * i) as u64;
        assert_eq!(map_indexed(Execution::Sequential, 100, f), map_indexed(Execution::Parallel, 100, f));
    }
}
