//! Row-sliced execution helpers.
//!
//! With the `parallel` feature the closures run on the rayon pool; without
//! it they run inline on the calling thread. Both paths produce
//! bitwise-identical results: each output row is written by exactly one
//! closure invocation, and reductions combine per-row partials in row
//! order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fill `out` by rows: `f(y, row)` writes row `y` (length `width`).
pub(crate) fn fill_rows<F>(out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    debug_assert_eq!(out.len() % width.max(1), 0);
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(width).enumerate().for_each(|(y, row)| f(y, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(width).enumerate().for_each(|(y, row)| f(y, row));
    }
}

/// Sum `f(y)` over rows `0..height` in fixed row order.
///
/// Per-row partials are computed independently (possibly concurrently) and
/// folded sequentially, so the result does not depend on scheduling.
pub(crate) fn sum_rows<F>(height: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        let partials: Vec<f64> = (0..height).into_par_iter().map(f).collect();
        partials.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..height).map(f).sum()
    }
}

/// Map each index in `0..n` to a value, preserving index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
