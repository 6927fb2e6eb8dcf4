//! Index-parallel map that falls back to a sequential loop without `std`.
//!
//! Results are always collected in index order, so reductions over the
//! returned vector are deterministic regardless of scheduling.

use alloc::vec::Vec;

#[cfg(feature = "std")]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "std"))]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
