//! Data-parallel map helpers. With the `parallel` feature (default) the
//! fallible maps fan out over rayon; without it they run sequentially.
//! The `*_sequential` variants are always compiled so benchmarks can
//! compare the two paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps a fallible function over items, in parallel when enabled. Output
/// order always matches input order.
#[cfg(feature = "parallel")]
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    F: Fn(&T) -> Result<R, E>,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`try_map`], independent of the feature flag.
pub fn try_map_sequential<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    F: Fn(&T) -> Result<R, E>,
{
    items.iter().map(f).collect()
}
