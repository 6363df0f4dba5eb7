//! Data-parallel loop dispatch.
//!
//! Hot loops (exhaustive classical search, robust-experiment sampling,
//! Schur-complement assembly) run through these helpers. With the `parallel`
//! feature (default) they use rayon; without it they fall back to plain
//! sequential iteration so results are identical either way. The `*_seq`
//! variants are always available so benches can compare both paths in one
//! build.

/// Map `f` over `0..n` and collect the results in index order.
pub fn map_collect<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_collect_seq(n, f)
    }
}

/// Sequential twin of [`map_collect`].
pub fn map_collect_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Fold `f` over `0..n` with a deterministic reduction.
///
/// `reduce` must be associative and commutative for the parallel and
/// sequential paths to agree.
pub fn fold_reduce<T, F, R>(n: usize, identity: T, f: F, reduce: R) -> T
where
    T: Send + Clone + Sync,
    F: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(&f)
            .reduce(|| identity.clone(), &reduce)
    }
    #[cfg(not(feature = "parallel"))]
    {
        fold_reduce_seq(n, identity, f, reduce)
    }
}

/// Sequential twin of [`fold_reduce`].
pub fn fold_reduce_seq<T, F, R>(n: usize, identity: T, f: F, reduce: R) -> T
where
    T: Clone,
    F: Fn(usize) -> T,
    R: Fn(T, T) -> T,
{
    (0..n).map(f).fold(identity, reduce)
}
