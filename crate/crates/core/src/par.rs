//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) independent tasks are spread over a
//! rayon pool; without it the same calls run as ordinary iterators. Results
//! are always collected in index order.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `range`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_range<T, F>(range: Range<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(range: Range<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    range.map(f).collect()
}

/// Runs `f` with at most `workers` threads. `None` uses the global pool.
#[cfg(feature = "parallel")]
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T, F>(_workers: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    f()
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
