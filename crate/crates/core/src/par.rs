//! Execution primitives for the data-parallel inner loops.
//!
//! Every hot loop in the crate routes through [`map_values`] / [`map_indices`]
//! and reduces with [`pairwise_sum`]. With the `parallel` feature the maps run
//! on rayon; without it they run sequentially. Reductions always use the same
//! fixed pairwise tree over the materialized value vector, so results are
//! bit-identical regardless of thread count or feature selection.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over a slice, parallel when the `parallel` feature is enabled.
/// Output order matches input order.
pub fn map_values<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_values_seq(items, f)
    }
}

/// Sequential fallback of [`map_values`]; always available so callers and
/// benches can compare both paths.
pub fn map_values_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map `f` over `0..n`, parallel when the `parallel` feature is enabled.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indices_seq(n, f)
    }
}

/// Sequential fallback of [`map_indices`].
pub fn map_indices_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Deterministic pairwise-tree sum. The reduction order is a function of the
/// slice length only, never of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
