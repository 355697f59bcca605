//! Order-fixed parallel reductions.
//!
//! Work is split into chunks of a fixed length independent of the worker
//! count, partial results are collected in chunk order and combined by a
//! pairwise tree, so sums are bitwise reproducible for any thread pool.

use std::ops::{Add, Range};

use rayon::prelude::*;

pub const CHUNK: usize = 4096;

pub(crate) fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Pairwise combination of an ordered list of partials.
pub fn tree_combine<T: Copy + Add<Output = T>>(mut parts: Vec<T>, zero: T) -> T {
    if parts.is_empty() {
        return zero;
    }
    while parts.len() > 1 {
        let next: Vec<T> = parts
            .chunks(2)
            .map(|p| if p.len() == 2 { p[0] + p[1] } else { p[0] })
            .collect();
        parts = next;
    }
    parts[0]
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<T, F>(n: usize, zero: T, f: F) -> T
where
    T: Copy + Send + Sync + Add<Output = T>,
    F: Fn(usize) -> T + Sync,
{
    let parts: Vec<T> = chunk_ranges(n)
        .into_par_iter()
        .map(|r| r.fold(zero, |acc, i| acc + f(i)))
        .collect();
    tree_combine(parts, zero)
}

/// Deterministic sum of a per-chunk closure.
pub fn sum_chunks<T, F>(n: usize, zero: T, f: F) -> T
where
    T: Copy + Send + Sync + Add<Output = T>,
    F: Fn(Range<usize>) -> T + Sync,
{
    let parts: Vec<T> = chunk_ranges(n).into_par_iter().map(&f).collect();
    tree_combine(parts, zero)
}
