//! Execution strategy for embarrassingly parallel stages.
//!
//! Heavy loops (solver restarts, population evaluation, grid shards, Monte
//! Carlo blocks) are expressed as index-to-value maps collected in index
//! order, so the parallel and sequential paths produce identical results
//! and reductions stay deterministic under any worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to drive an indexed map.
///
/// `Parallel` uses the rayon global pool when the crate is built with the
/// `parallel` feature and degrades to sequential execution otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

/// Applies `f` to every index in `0..n` and collects results in index order.
pub fn map_collect<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => (0..n).map(f).collect(),
        ExecMode::Sequential => (0..n).map(f).collect(),
    }
}

/// Splits `total` items into blocks of at most `block_size`, maps each block
/// to a partial value, and folds the partials sequentially in block order.
///
/// The fold order is fixed, so floating-point accumulations are reproducible.
pub fn blocked_fold<T, A, M, F>(
    mode: ExecMode,
    total: usize,
    block_size: usize,
    map: M,
    init: A,
    fold: F,
) -> A
where
    T: Send,
    M: Fn(usize, std::ops::Range<usize>) -> T + Sync,
    F: FnMut(A, T) -> A,
{
    assert!(block_size > 0, "block_size must be positive");
    let blocks = total.div_ceil(block_size);
    let partials = map_collect(mode, blocks, |b| {
        let start = b * block_size;
        let end = (start + block_size).min(total);
        map(b, start..end)
    });
    partials.into_iter().fold(init, fold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sin();
        let a = map_collect(ExecMode::Parallel, 1000, f);
        let b = map_collect(ExecMode::Sequential, 1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn blocked_fold_covers_all_indices() {
        let sum = blocked_fold(
            ExecMode::Parallel,
            1003,
            64,
            |_, range| range.sum::<usize>(),
            0usize,
            |acc, s| acc + s,
        );
        assert_eq!(sum, 1003 * 1002 / 2);
    }
}
