//! Statistical certification of stable marginals and monotone trends.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};

/// Smallest sample accepted by the tail and stability tests.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailIndex {
    pub alpha: f64,
    pub se: f64,
    /// Order statistics used.
    pub k: usize,
}

/// Hill estimator on the largest `top_fraction` of `|x|`.
pub fn hill_tail_index(samples: &[f64], top_fraction: f64) -> Result<TailIndex> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            needed: MIN_SAMPLES,
        });
    }
    if !(top_fraction > 0.0 && top_fraction <= 0.05) {
        return Err(invalid("top_fraction", format!("must lie in (0, 0.05], got {top_fraction}")));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    let k = ((samples.len() as f64 * top_fraction) as usize).max(1);
    // place the k+1 largest values at the end
    let pivot = abs.len() - k - 1;
    abs.select_nth_unstable_by(pivot, f64::total_cmp);
    let threshold = abs[pivot];
    if threshold <= 0.0 {
        return Err(invalid("samples", "tail threshold is zero"));
    }
    let mean_log: f64 = abs[pivot + 1..]
        .iter()
        .map(|x| (x / threshold).ln())
        .sum::<f64>()
        / k as f64;
    let alpha = 1.0 / mean_log;
    Ok(TailIndex {
        alpha,
        se: alpha / (k as f64).sqrt(),
        k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples { got: 0, needed: 1 });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    y.sort_unstable_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let p_value = kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult { statistic: d, p_value })
}

/// Splits `samples` in thirds `(a, b, c)` and compares `(a + b) / 2^(1/α)` with `c`.
pub fn sum_stability_test(samples: &[f64], alpha: f64) -> Result<KsResult> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            needed: MIN_SAMPLES,
        });
    }
    let third = samples.len() / 3;
    let scale = 2f64.powf(-1.0 / alpha);
    let sums: Vec<f64> = samples[..third]
        .iter()
        .zip(&samples[third..2 * third])
        .map(|(a, b)| (a + b) * scale)
        .collect();
    ks_two_sample(&sums, &samples[2 * third..3 * third])
}

/// Mann-Kendall monotone trend statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendTest {
    pub s: i64,
    pub z: f64,
    /// One-sided p-value against a decreasing trend.
    pub p_decreasing: f64,
    /// One-sided p-value against an increasing trend.
    pub p_increasing: f64,
}

pub fn mann_kendall(x: &[f64]) -> Result<TrendTest> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { got: n, needed: 3 });
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match x[j].partial_cmp(&x[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j + 1;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let z = match s.signum() {
        1 => (s as f64 - 1.0) / var.sqrt(),
        -1 => (s as f64 + 1.0) / var.sqrt(),
        _ => 0.0,
    };
    let normal = Normal::standard();
    Ok(TrendTest {
        s,
        z,
        p_decreasing: normal.cdf(z),
        p_increasing: normal.sf(z),
    })
}
