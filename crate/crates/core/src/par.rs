//! Optional data parallelism for sample loops.
//!
//! `NCL_THREADS` selects the worker count; 0 or unset runs sequentially.
//! Results always come back in index order and callers reduce them
//! sequentially, so output does not depend on the thread count.

use std::sync::OnceLock;

use rayon::prelude::*;

static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();

pub fn configured_threads() -> usize {
    std::env::var("NCL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn pool() -> Option<&'static rayon::ThreadPool> {
    POOL.get_or_init(|| match configured_threads() {
        0 => None,
        n => rayon::ThreadPoolBuilder::new().num_threads(n).build().ok(),
    })
    .as_ref()
}

/// `(0..count).map(f)` collected in order, possibly on a worker pool.
pub fn ordered_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match pool() {
        Some(p) => p.install(|| (0..count).into_par_iter().map(&f).collect()),
        None => (0..count).map(f).collect(),
    }
}

/// Like [`ordered_map`] but stops at the first error in index order.
pub fn try_ordered_map<T, E, F>(count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    ordered_map(count, f).into_iter().collect()
}
