//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these fan work out over rayon;
//! without it they run plain loops. Both arms fill output slots by index and
//! perform identical per-element arithmetic, so results are bit-identical
//! across modes and thread counts — reductions that would reassociate
//! floating-point sums are deliberately absent from this module.

/// Evaluates `f(i, scratch)` for `i` in `start..end` into a vector, giving
/// each worker a reusable `dim`-sized scratch buffer (node coordinates).
pub fn map_range_with_scratch<F>(start: usize, end: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) -> f64 + Sync,
{
    let len = end - start;
    let mut out = vec![0.0; len];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        const CHUNK: usize = 1024;
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let mut scratch = vec![0.0; dim];
                let base = start + c * CHUNK;
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(base + k, &mut scratch);
                }
            });
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut scratch = vec![0.0; dim];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = f(start + k, &mut scratch);
        }
    }
    out
}

/// Order-preserving map over a slice.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving map over an index range.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
