//! Chunked Monte-Carlo driver.
//!
//! Sample `i` belongs to chunk `i / CHUNK`; chunk `c` draws from stream `c` of
//! the estimator's seed and chunk results are merged in chunk order. The
//! output is therefore bit-identical for every worker count.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::{stream, SimRng};

pub const CHUNK: usize = 4096;

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0, n: 0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            se: self.se * c.abs(),
            n: self.n,
        }
    }

    /// `|value - target|` in units of the standard error; 0 when both vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

/// Running means and second central moments of several components.
#[derive(Clone, Debug)]
pub struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.mean.len());
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Pairwise merge (Chan et al.).
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for j in 0..self.mean.len() {
            let d = other.mean[j] - self.mean[j];
            self.mean[j] += d * nb / n;
            self.m2[j] += other.m2[j] + d * d * na * nb / n;
        }
        self.n += other.n;
    }

    pub fn estimate(&self, j: usize) -> Estimate {
        let se = if self.n > 1 {
            (self.m2[j] / (self.n as f64 - 1.0) / self.n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Estimate {
            value: self.mean[j],
            se,
            n: self.n,
        }
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        (0..self.dim()).map(|j| self.estimate(j)).collect()
    }
}

/// Runs `body(rng, range)` over fixed chunks of `0..n` on `workers` threads and
/// returns the per-chunk results in chunk order.
pub fn run_chunks<T, F>(seed: u64, n: usize, workers: usize, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng, Range<usize>) -> Result<T> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let run = |c: usize| {
        let mut rng = stream(seed, c as u64);
        body(&mut rng, c * CHUNK..((c + 1) * CHUNK).min(n))
    };
    if workers <= 1 {
        return (0..chunks).map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    pool.install(|| (0..chunks).into_par_iter().map(run).collect())
}

/// Means of a `dim`-vector integrand over `n` samples.
pub fn mean_vector<F>(seed: u64, n: usize, workers: usize, dim: usize, sample: F) -> Result<Moments>
where
    F: Fn(&mut SimRng, &mut [f64]) -> Result<()> + Sync,
{
    let parts = run_chunks(seed, n, workers, |rng, range| {
        let mut acc = Moments::new(dim);
        let mut buf = vec![0.0; dim];
        for _ in range {
            sample(rng, &mut buf)?;
            acc.push(&buf);
        }
        Ok(acc)
    })?;
    let mut total = Moments::new(dim);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Mean of a scalar integrand.
pub fn mean_scalar<F>(seed: u64, n: usize, workers: usize, sample: F) -> Result<Estimate>
where
    F: Fn(&mut SimRng) -> Result<f64> + Sync,
{
    Ok(mean_vector(seed, n, workers, 1, |rng, out| {
        out[0] = sample(rng)?;
        Ok(())
    })?
    .estimate(0))
}
