//! Reproducible reductions.
//!
//! Work is cut into fixed-size chunks whose boundaries depend only on the
//! input length. Each chunk is accumulated sequentially and the chunk
//! partials are then combined pairwise in index order, so the floating point
//! result is identical for any rayon thread count.

use std::ops::AddAssign;

use rayon::prelude::*;

use crate::error::Result;

/// Rows per chunk.
pub const CHUNK: usize = 512;

/// Pairwise (cascade) sum of a slice in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        n if n <= 16 => values.iter().fold(0.0, |acc, v| acc + v),
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

fn pairwise_combine<T: Copy + Default + AddAssign>(mut parts: Vec<Vec<T>>, width: usize) -> Vec<T> {
    if parts.is_empty() {
        return vec![T::default(); width];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some(mut a) = iter.next() {
            if let Some(b) = iter.next() {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_else(|| vec![T::default(); width])
}

/// Sums `len` rows of `width` values, where `row(i, out)` writes row `i`
/// into a zeroed buffer. Deterministic for any thread count.
pub fn chunked_row_sum<T, F>(len: usize, width: usize, row: F) -> Result<Vec<T>>
where
    T: Copy + Default + AddAssign + Send + Sync,
    F: Fn(usize, &mut [T]) -> Result<()> + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![T::default(); width];
            let mut buf = vec![T::default(); width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                buf.iter_mut().for_each(|b| *b = T::default());
                row(i, &mut buf)?;
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += *b;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_combine(parts, width))
}

/// Parallel map that keeps index order.
pub fn ordered_map<R, F>(len: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync,
{
    (0..len).into_par_iter().map(|i| f(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn chunked_sum_is_thread_count_independent() {
        let row = |i: usize, out: &mut [f64]| {
            out[0] = (i as f64 * 0.37).sin() * 1e-3;
            out[1] = 1.0 / (1.0 + i as f64);
            Ok(())
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(7).build().unwrap();
        let a = one.install(|| chunked_row_sum(10_007, 2, row)).unwrap();
        let b = many.install(|| chunked_row_sum(10_007, 2, row)).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn empty_sum_is_zero_row() {
        let s: Vec<f64> = chunked_row_sum(0, 3, |_, _| Ok(())).unwrap();
        assert_eq!(s, vec![0.0; 3]);
    }
}
