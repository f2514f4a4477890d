use crate::error::{Error, Result};
use crate::par::map_indices;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Records per partition of a reduction. Fixed, so results do not depend on
/// the number of worker threads.
pub const PARTITION: usize = 4096;

/// Sample mean of a complex kernel with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub mean: C64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl EstimationResult {
    /// A value known without sampling error.
    pub fn exact(mean: C64, n_samples: u64) -> Self {
        Self { mean, std_error: 0.0, n_samples }
    }

    /// `|mean - truth| <= k * std_error`, with a tiny absolute floor for exact results.
    pub fn within(&self, truth: C64, k: f64) -> bool {
        (self.mean - truth).norm() <= k * self.std_error + 1e-12
    }
}

/// Single-pass count/mean/M2 accumulator for complex samples, with
/// `M2 = sum |x - mean|^2` so the variance is that of the real and imaginary
/// parts combined.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    mean: C64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, x: C64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += (delta.conj() * (x - self.mean)).re;
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * (other.n as f64 / n as f64);
        self.m2 += other.m2 + delta.norm_sqr() * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn result(&self) -> Result<EstimationResult> {
        if self.n < 2 {
            return Err(Error::NotEnoughSamples { needed: 2, got: self.n as usize });
        }
        Ok(EstimationResult {
            mean: self.mean,
            std_error: (self.variance() / self.n as f64).sqrt(),
            n_samples: self.n,
        })
    }
}

/// Averages `kernel` over `items` by partitioned reduction.
pub fn estimate<T, F>(items: &[T], kernel: F) -> Result<EstimationResult>
where
    T: Sync,
    F: Fn(&T) -> C64 + Sync + Send,
{
    accumulate(items, kernel).result()
}

pub(crate) fn accumulate<T, F>(items: &[T], kernel: F) -> Accumulator
where
    T: Sync,
    F: Fn(&T) -> C64 + Sync + Send,
{
    let parts = items.len().div_ceil(PARTITION);
    let partials = map_indices(parts, |p| {
        let mut acc = Accumulator::new();
        let end = ((p + 1) * PARTITION).min(items.len());
        for item in &items[p * PARTITION..end] {
            acc.push(kernel(item));
        }
        acc
    });
    let mut total = Accumulator::new();
    for part in &partials {
        total.merge(part);
    }
    total
}

/// Like [`accumulate`], for kernels that yield several values per item at once.
pub(crate) fn accumulate_many<T, F>(items: &[T], width: usize, kernel: F) -> Vec<Accumulator>
where
    T: Sync,
    F: Fn(&T, &mut [C64]) + Sync + Send,
{
    let parts = items.len().div_ceil(PARTITION);
    let partials = map_indices(parts, |p| {
        let mut accs = vec![Accumulator::new(); width];
        let mut buf = vec![C64::new(0.0, 0.0); width];
        let end = ((p + 1) * PARTITION).min(items.len());
        for item in &items[p * PARTITION..end] {
            kernel(item, &mut buf);
            for (a, x) in accs.iter_mut().zip(&buf) {
                a.push(*x);
            }
        }
        accs
    });
    let mut total = vec![Accumulator::new(); width];
    for part in &partials {
        for (t, a) in total.iter_mut().zip(part) {
            t.merge(a);
        }
    }
    total
}
