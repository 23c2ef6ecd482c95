//! Data-parallel execution helpers.
//!
//! With the `parallel` feature (default) the closures run on the rayon pool;
//! without it they run sequentially. Both paths produce bit-identical
//! results: work is partitioned over independent output slots and every
//! floating-point reduction happens in a fixed order inside one task.
//!
//! Callers pass a rough per-element work estimate; workloads below
//! [`MIN_PARALLEL_WORK`] scalar ops stay sequential, where pool dispatch
//! would cost more than it saves.

pub(crate) const MIN_PARALLEL_WORK: usize = 1 << 16;

/// Maps `f` over `0..n`, collecting results in index order.
/// `work_per_item` is an estimate of scalar ops per call.
pub(crate) fn map_indexed<T, F>(n: usize, work_per_item: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if n.saturating_mul(work_per_item) >= MIN_PARALLEL_WORK {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = work_per_item;
    (0..n).map(f).collect()
}

/// Splits `data` into consecutive `chunk_len` slices and applies
/// `f(chunk_index, chunk)` to each. Chunks are disjoint, so the parallel
/// and sequential paths write identical bytes.
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, work_per_elem: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if data.len().saturating_mul(work_per_elem) >= MIN_PARALLEL_WORK {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, chunk)| f(i, chunk));
        return;
    }
    let _ = work_per_elem;
    for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
        f(i, chunk);
    }
}
