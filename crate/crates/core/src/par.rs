//! Data-parallel loop helpers. With the `parallel` feature these dispatch to rayon,
//! otherwise they run the same closures sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(chunk_index, chunk)` on consecutive `chunk`-sized pieces of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Builds a vector whose `i`-th entry is `f(i)`.
pub fn map_indices<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Maps over a slice.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sums `f(i)` over `0..len`.
pub fn sum_indices<T, F>(len: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        // Fixed-size blocks keep the reduction order independent of the thread count.
        const BLOCK: usize = 4096;
        let blocks = len.div_ceil(BLOCK);
        let partial: Vec<T> = (0..blocks)
            .into_par_iter()
            .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(len)).map(&f).sum())
            .collect();
        partial.into_iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        const BLOCK: usize = 4096;
        let blocks = len.div_ceil(BLOCK);
        (0..blocks)
            .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(len)).map(&f).sum::<T>())
            .sum()
    }
}

/// Number of worker threads the parallel helpers fan out to.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
