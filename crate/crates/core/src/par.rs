//! Run-level parallelism. Results are always collected in run-index order,
//! so outputs never depend on the worker count or on scheduling.

use rayon::prelude::*;

/// Maps `f` over run indices 0..n on the ambient rayon pool.
pub(crate) fn run_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `body` on a bounded pool of the requested size; `None` (or zero)
/// keeps the ambient pool.
pub(crate) fn with_workers<R, F>(workers: Option<usize>, body: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("failed to build worker pool")
            .install(body),
        _ => body(),
    }
}
