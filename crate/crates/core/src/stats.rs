//! Order-independent reductions and bootstrap standard errors.

use rand::Rng;
use rayon::prelude::*;

use crate::tensor::{RngStream, C64};

/// Resamples used by every bootstrap estimate.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Samples reduced sequentially before entering the pairwise tree.
pub const CHUNK: usize = 64;

/// Pairwise (cascade) summation with `O(log n)` live partial sums.
///
/// Partial sums are merged like a binary counter, so the association order
/// depends only on the number of pushed items, never on timing.
pub struct PairwiseAccumulator<T> {
    stack: Vec<(u32, T)>,
}

impl<T> Default for PairwiseAccumulator<T> {
    fn default() -> Self {
        Self { stack: Vec::new() }
    }
}

pub trait Summand: Sized {
    fn merge(&mut self, other: Self);
}

impl Summand for f64 {
    fn merge(&mut self, other: Self) {
        *self += other;
    }
}

impl Summand for C64 {
    fn merge(&mut self, other: Self) {
        *self += other;
    }
}

impl Summand for Vec<C64> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

impl<A: Summand, B: Summand> Summand for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

impl<T: Summand> PairwiseAccumulator<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: T) {
        let mut level = 0;
        let mut item = item;
        while let Some((top, _)) = self.stack.last() {
            if *top != level {
                break;
            }
            let (_, mut lhs) = self.stack.pop().expect("non-empty");
            lhs.merge(item);
            item = lhs;
            level += 1;
        }
        self.stack.push((level, item));
    }

    pub fn finish(mut self) -> Option<T> {
        let (_, mut acc) = self.stack.pop()?;
        while let Some((_, mut lhs)) = self.stack.pop() {
            lhs.merge(acc);
            acc = lhs;
        }
        Some(acc)
    }
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn pairwise_sum_c(xs: &[C64]) -> C64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum_c(a) + pairwise_sum_c(b)
}

/// Evaluates `f(i)` for `i in 0..n` in parallel and returns results in index
/// order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Sum of `f(i)` over `0..n` with a thread-count independent association
/// order: fixed chunks of [`CHUNK`] summed sequentially, then combined
/// pairwise. At most one chunk sum per worker is alive at a time.
pub fn par_chunked_sum<T, F>(n: usize, f: F) -> Option<T>
where
    T: Summand + Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let n_chunks = n.div_ceil(CHUNK);
    let batch = rayon::current_num_threads().max(1);
    let mut acc = PairwiseAccumulator::new();
    for start in (0..n_chunks).step_by(batch) {
        let end = (start + batch).min(n_chunks);
        let sums: Vec<T> = (start..end)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(n);
                let mut s = f(lo);
                for i in lo + 1..hi {
                    s.merge(f(i));
                }
                s
            })
            .collect();
        for s in sums {
            acc.push(s);
        }
    }
    acc.finish()
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Bootstrap standard error of the sample mean.
pub fn bootstrap_std_error(xs: &[f64], resamples: usize, stream: RngStream) -> f64 {
    let n = xs.len();
    if n < 2 || xs.iter().all(|x| *x == xs[0]) {
        return 0.0;
    }
    let mut rng = stream.rng();
    let means: Vec<f64> = (0..resamples)
        .map(|_| {
            let draws: Vec<f64> = (0..n).map(|_| xs[rng.random_range(0..n)]).collect();
            mean(&draws)
        })
        .collect();
    std_dev(&means)
}

/// Bootstrap standard error of a complex mean: `sqrt(E*|m* - m|^2)`, the
/// real and imaginary parts resampled jointly.
pub fn bootstrap_std_error_c(xs: &[C64], resamples: usize, stream: RngStream) -> f64 {
    let n = xs.len();
    if n < 2 || xs.iter().all(|x| *x == xs[0]) {
        return 0.0;
    }
    let mut rng = stream.rng();
    let means: Vec<C64> = (0..resamples)
        .map(|_| {
            let draws: Vec<C64> = (0..n).map(|_| xs[rng.random_range(0..n)]).collect();
            pairwise_sum_c(&draws) / n as f64
        })
        .collect();
    let re: Vec<f64> = means.iter().map(|z| z.re).collect();
    let im: Vec<f64> = means.iter().map(|z| z.im).collect();
    std_dev(&re).hypot(std_dev(&im))
}

/// Sample standard deviation (`n - 1` denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&dev) / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty sample");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}
