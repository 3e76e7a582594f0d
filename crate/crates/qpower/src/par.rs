//! Data-parallel fan-out with a sequential fallback.
//!
//! Independent work items (multi-start restarts, grid cells, Monte Carlo
//! batches) go through [`map_maybe_parallel`]. With the `parallel` feature
//! the `parallel` flag picks rayon or a plain iterator at runtime; without
//! the feature everything is sequential and the flag is ignored. Results are
//! collected in input order either way, so output bytes never depend on
//! scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_maybe_parallel<T, U, F>(items: Vec<T>, parallel: bool, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    if parallel {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_maybe_parallel<T, U, F>(items: Vec<T>, _parallel: bool, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}
