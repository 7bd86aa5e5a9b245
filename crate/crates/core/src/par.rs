//! Data-parallel kernels with a sequential fallback.
//!
//! Every reduction is split into fixed-size chunks whose partial results are
//! combined in index order, so sums are bit-identical with and without the
//! `parallel` feature and independent of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Elements per reduction chunk.
pub const CHUNK: usize = 1024;

/// Fill `out[k] = f(k)`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(base + k);
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = f(k);
        }
    }
}

/// Build a vector of length `n` with entries `f(k)`.
pub fn build<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let mut out = vec![0.0; n];
    fill(&mut out, f);
    out
}

/// In-place update `v[k] = f(k, v[k])`.
pub fn update<F>(values: &mut [f64], f: F)
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        values.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(base + k, *slot);
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (k, slot) in values.iter_mut().enumerate() {
            *slot = f(k, *slot);
        }
    }
}

fn chunk_sum<F>(lo: usize, hi: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64,
{
    let mut acc = 0.0;
    for k in lo..hi {
        acc += f(k);
    }
    acc
}

/// Deterministic `sum_{k<n} f(k)`.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    #[cfg(feature = "parallel")]
    let partial: Vec<f64> =
        (0..chunks).into_par_iter().map(|c| chunk_sum(c * CHUNK, ((c + 1) * CHUNK).min(n), &f)).collect();
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<f64> = (0..chunks).map(|c| chunk_sum(c * CHUNK, ((c + 1) * CHUNK).min(n), &f)).collect();
    partial.iter().sum()
}

pub fn sum(values: &[f64]) -> f64 {
    sum_by(values.len(), |k| values[k])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(a.len(), |k| a[k] * b[k])
}

/// Maximum of `f(k)` over `k < n`; `-inf` for `n == 0`.
pub fn max_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().with_min_len(CHUNK).map(f).reduce(|| f64::NEG_INFINITY, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Map independent jobs, preserving order.
pub fn map_jobs<T, R, F>(items: &[T], f: F) -> Vec<R>
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
