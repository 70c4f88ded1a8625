//! Data-parallel execution with a sequential fallback.
//!
//! Every batch kernel in the crate goes through these helpers. Work is split
//! into fixed-size chunks whose partial results are combined in index order,
//! so the parallel and sequential paths produce bit-identical floating point
//! results regardless of thread count or scheduling.

use std::ops::Range;

/// Indices per chunk for batch kernels.
pub const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise behaves
    /// like [`Execution::Sequential`].
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this mode actually fans out to a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Sum of `f(i)` over `range`, reduced chunk by chunk in index order.
    pub fn chunked_sum<F>(self, range: Range<usize>, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let partial = |chunk: Range<usize>| chunk.map(&f).sum::<f64>();
        let chunks = chunk_ranges(range);
        let partials: Vec<f64> = self.map_slice(&chunks, |c| partial(c.clone()));
        partials.into_iter().sum()
    }

    /// `f(i)` for every `i` in `range`, collected in order.
    pub fn map_range<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return range.into_par_iter().with_min_len(CHUNK).map(f).collect();
        }
        range.map(f).collect()
    }

    /// `f(item)` for every item, collected in order.
    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

fn chunk_ranges(range: Range<usize>) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(range.len() / CHUNK + 1);
    let mut start = range.start;
    while start < range.end {
        let end = (start + CHUNK).min(range.end);
        out.push(start..end);
        start = end;
    }
    out
}
