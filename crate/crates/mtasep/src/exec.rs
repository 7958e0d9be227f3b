//! Data-parallel driving loops.
//!
//! Every hot loop in the crate funnels through these helpers so the `parallel`
//! feature is a single switch: with it, rayon splits the index space; without
//! it, the same closures run on one thread. Closures must be pure in the index
//! argument — results are merged by addition or concatenation only.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sums `f(0) + f(1) + … + f(n-1)`.
#[cfg(feature = "parallel")]
pub(crate) fn sum_bigint<F>(n: usize, f: F) -> BigInt
where
    F: Fn(usize) -> BigInt + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(f)
        .reduce(BigInt::zero, |a, b| a + b)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sum_bigint<F>(n: usize, f: F) -> BigInt
where
    F: Fn(usize) -> BigInt + Sync + Send,
{
    (0..n).map(f).fold(BigInt::zero(), |a, b| a + b)
}

/// Fallible sum; the first error wins.
#[cfg(feature = "parallel")]
pub(crate) fn try_sum_bigint<F>(n: usize, f: F) -> Result<BigInt>
where
    F: Fn(usize) -> Result<BigInt> + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(f)
        .try_reduce(BigInt::zero, |a, b| Ok(a + b))
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn try_sum_bigint<F>(n: usize, f: F) -> Result<BigInt>
where
    F: Fn(usize) -> Result<BigInt> + Sync + Send,
{
    let mut acc = BigInt::zero();
    for i in 0..n {
        acc += f(i)?;
    }
    Ok(acc)
}

/// Maps the index space to a vector, preserving order.
#[cfg(feature = "parallel")]
pub(crate) fn map_vec<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_vec<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Fold-and-merge: each worker folds a chunk of the index space into its own
/// accumulator, then accumulators are merged pairwise. `fold` must commute
/// with `merge` in the usual map-reduce sense.
#[cfg(feature = "parallel")]
pub(crate) fn fold_merge<A, F, M>(n: usize, init: impl Fn() -> A + Sync, fold: F, merge: M) -> A
where
    A: Send,
    F: Fn(A, usize) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..n).into_par_iter().fold(&init, &fold).reduce(&init, merge)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn fold_merge<A, F, M>(n: usize, init: impl Fn() -> A + Sync, fold: F, _merge: M) -> A
where
    A: Send,
    F: Fn(A, usize) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..n).fold(init(), fold)
}
