//! Data-parallel primitives with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! the same closures in order. Reductions never depend on scheduling: every
//! sum is taken over fixed blocks and combined pairwise, so both builds give
//! bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Leaf size for pairwise summation.
const LEAF: usize = 32;

/// Pairwise sum with a fixed split pattern.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= LEAF {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Calls `f(row_index, row)` for each `row_len`-sized chunk of `out`.
pub fn for_each_row<F>(out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(row_len).enumerate().for_each(|(i, row)| f(i, row));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(row_len).enumerate().for_each(|(i, row)| f(i, row));
}

/// Like [`for_each_row`] over two equally shaped buffers.
pub fn for_each_row2<F>(a: &mut [f64], b: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64], &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    a.par_chunks_mut(row_len)
        .zip(b.par_chunks_mut(row_len))
        .enumerate()
        .for_each(|(i, (ra, rb))| f(i, ra, rb));
    #[cfg(not(feature = "parallel"))]
    a.chunks_mut(row_len)
        .zip(b.chunks_mut(row_len))
        .enumerate()
        .for_each(|(i, (ra, rb))| f(i, ra, rb));
}

/// Evaluates `f` on `0..n` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return (0..n).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..n).map(f).collect();
}

/// Elementwise `y[i] = a[i] + s * b[i]`.
pub fn axpy_into(y: &mut [f64], a: &[f64], s: f64, b: &[f64]) {
    const CHUNK: usize = 4096;
    #[cfg(feature = "parallel")]
    y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, yc)| {
        let o = c * CHUNK;
        for (k, yk) in yc.iter_mut().enumerate() {
            *yk = a[o + k] + s * b[o + k];
        }
    });
    #[cfg(not(feature = "parallel"))]
    for ((yk, ak), bk) in y.iter_mut().zip(a).zip(b) {
        *yk = ak + s * bk;
    }
}

/// Runs `f` inside a pool of `threads` workers (ignored without `parallel`).
pub fn with_threads<T, F>(threads: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Whether this build runs the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
