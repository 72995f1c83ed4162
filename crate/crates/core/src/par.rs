//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run the same closures sequentially. Results are identical either way:
//! every helper writes each output slot exactly once and reductions use
//! order-independent operations (min/max) or a fixed chunk order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for pointwise loops; large enough to amortize task overhead.
const CHUNK: usize = 1 << 14;

/// Fill `out[i] = f(i)`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (i, v) in chunk.iter_mut().enumerate() {
                *v = f(base + i);
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, v) in out.iter_mut().enumerate() {
            *v = f(i);
        }
    }
}

/// Fill `out` chunk by chunk: `f(base, chunk)` writes `out[base..base + chunk.len()]`.
pub fn fill_chunks<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    const BLOCK: usize = 1 << 11;
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(BLOCK)
            .enumerate()
            .for_each(|(c, chunk)| f(c * BLOCK, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (c, chunk) in out.chunks_mut(BLOCK).enumerate() {
            f(c * BLOCK, chunk);
        }
    }
}

/// Map a slice of independent work items, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
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

/// Sum of `f(i)` over `0..n`, accumulated per fixed-size chunk and then in
/// chunk order so the result does not depend on scheduling.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = (0..chunks).map(partial).collect();
    parts.into_iter().sum()
}

/// Minimum of `f(i)` over `0..n` with its index; ties go to the smallest index.
pub fn argmin<F>(n: usize, f: F) -> (usize, f64)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let pick = |a: (usize, f64), b: (usize, f64)| {
        if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) || a.1.is_nan() {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|i| (i, f(i)))
            .reduce(|| (usize::MAX, f64::INFINITY), pick)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n)
            .map(|i| (i, f(i)))
            .fold((usize::MAX, f64::INFINITY), pick)
    }
}

/// Maximum of `f(i)` over `0..n`; NaN propagates.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let pick = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) };
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(f)
            .reduce(|| f64::NEG_INFINITY, pick)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::NEG_INFINITY, pick)
    }
}
