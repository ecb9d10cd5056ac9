//! Data-parallel map over sample sets, with a sequential fallback.
//!
//! Sweeps (axiom scans, curvature sampling, oracle comparisons, the
//! monomial search) are embarrassingly parallel over independent inputs.
//! With the `parallel` feature the indexed map runs on the rayon pool;
//! without it the same code path degrades to a plain loop. `map_indexed_seq`
//! is always sequential so benchmarks can compare both in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, parallel when the `parallel` feature is enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Sequential reference implementation of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// First `Some` produced by `f` over `0..n`, in any order under the
/// `parallel` feature (searches, not reductions).
pub fn find_map_indexed<T, F>(n: usize, f: F) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().find_map_any(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).find_map(f)
    }
}

/// Sequential reference implementation of [`find_map_indexed`].
pub fn find_map_indexed_seq<T, F>(n: usize, f: F) -> Option<T>
where
    F: Fn(usize) -> Option<T>,
{
    (0..n).find_map(f)
}

/// Cap the global thread pool; honored once, before first pool use.
/// No-op without the `parallel` feature or if the pool already exists.
pub fn configure_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Read a thread cap from the `HKQ_THREADS` environment variable.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("HKQ_THREADS").ok()?.trim().parse().ok()
}
