//! Ergodic-theoretic diagnostics: Koopman correlations, the zero-type
//! functional, rigidity scans, and Lévy-Khinchine consistency checks.

use num_complex::Complex64;
use serde::Serialize;

use crate::base::BaseSystem;
use crate::error::{invalid, Error, Result};
use crate::integrals::{jtilde, kappa, small_fiber_integral};
use crate::levy::{lk_fiber_integral, Observable, StableConfig};
use crate::mc::{mean_vector, Estimate};
use crate::rng::{purpose_seed, Purpose};
use crate::simulator::{PathBatch, SimOptions, Simulator};
use crate::stats::{mann_kendall, TrendTest};

/// `<U^n f, f> = ∫ sqrt(w_n) f(T^n w) f(w) dμ`.
pub fn koopman_correlation(
    sys: &BaseSystem,
    f: &Observable,
    n: i64,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Estimate> {
    f.check(sys)?;
    let m = mean_vector(purpose_seed(seed, Purpose::Koopman), samples, workers, 1, |rng, out| {
        let x = sys.sample_point(rng);
        let (y, w) = sys.apply_with_cocycle(&x, n)?;
        out[0] = (0.5 * w.ln()).exp() * f.eval(sys, &y)? * f.eval(sys, &x)?;
        Ok(())
    })?;
    Ok(m.estimate(0))
}

/// `∫ sqrt(w_n) dμ`.
pub fn zero_type_functional(
    sys: &BaseSystem,
    n: i64,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Estimate> {
    let m = mean_vector(purpose_seed(seed, Purpose::ZeroType), samples, workers, 1, |rng, out| {
        let x = sys.sample_point(rng);
        out[0] = (0.5 * sys.rn_cocycle(&x, n)?.ln()).exp();
        Ok(())
    })?;
    Ok(m.estimate(0))
}

/// Correlation estimates along a lag sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub lags: Vec<i64>,
    pub estimates: Vec<f64>,
    pub se: Vec<f64>,
    pub observable: String,
    pub samples: usize,
    /// Estimates are divided by the lag-0 value.
    pub normalized: bool,
}

/// Pre-registered decision rule for "tends to its lag-0 value".
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RigidityVerdict {
    /// Mann-Kendall test on the gaps `1 - ρ(n_k)`.
    pub trend: TrendTest,
    pub final_gap: f64,
    pub final_se: f64,
    /// Gaps decrease (one-sided p below the level).
    pub decreasing: bool,
    /// Final gap within 4 SE of 0.
    pub closes: bool,
    /// Every gap within 4 SE of 0, so there is no trend left to detect.
    pub settled: bool,
    /// `closes` and either `decreasing` or `settled`.
    pub rigid: bool,
}

pub const TREND_LEVEL: f64 = 0.01;

/// Applies the trend rule to gaps `1 - ρ(n_k)` with their standard errors.
pub fn rigidity_verdict(gaps: &[f64], se: &[f64]) -> Result<RigidityVerdict> {
    let trend = mann_kendall(gaps)?;
    let (final_gap, final_se) = (*gaps.last().unwrap(), *se.last().unwrap());
    let decreasing = trend.p_decreasing < TREND_LEVEL;
    let closes = final_gap.abs() <= 4.0 * final_se;
    let settled = gaps.iter().zip(se).all(|(g, s)| g.abs() <= 4.0 * s);
    Ok(RigidityVerdict {
        trend,
        final_gap,
        final_se,
        decreasing,
        closes,
        settled,
        rigid: closes && (decreasing || settled),
    })
}

impl CorrelationSeries {
    pub fn gaps(&self) -> Vec<f64> {
        self.estimates.iter().map(|r| 1.0 - r).collect()
    }

    pub fn verdict(&self) -> Result<RigidityVerdict> {
        if !self.normalized {
            return Err(invalid("series", "rigidity verdicts need normalized correlations"));
        }
        rigidity_verdict(&self.gaps(), &self.se)
    }
}

/// `ρ(n_k) = <U^{n_k} f, f> / |f|^2` on shared samples, with delta-method errors.
pub fn rigidity_scan(
    sys: &BaseSystem,
    f: &Observable,
    sequence: &[i64],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<CorrelationSeries> {
    f.check(sys)?;
    if sequence.is_empty() || sequence.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("sequence", "lags must be strictly increasing"));
    }
    let k = sequence.len();
    // layout: [f^2, a_1..a_k, a_1 f^2 .. a_k f^2]
    let m = mean_vector(
        purpose_seed(seed, Purpose::Rigidity),
        samples,
        workers,
        1 + 2 * k,
        |rng, out| {
            let x = sys.sample_point(rng);
            let fx = f.eval(sys, &x)?;
            let b = fx * fx;
            out[0] = b;
            for (j, &n) in sequence.iter().enumerate() {
                let (y, w) = sys.apply_with_cocycle(&x, n)?;
                let a = (0.5 * w.ln()).exp() * f.eval(sys, &y)? * fx;
                out[1 + j] = a;
                out[1 + k + j] = a * b;
            }
            Ok(())
        },
    )?;
    let nf = m.count() as f64;
    let b = m.estimate(0);
    if b.value == 0.0 {
        return Err(invalid("f", "observable has zero norm on the sample"));
    }
    let var_b = b.se * b.se * nf;
    let mut estimates = Vec::with_capacity(k);
    let mut se = Vec::with_capacity(k);
    for j in 0..k {
        let a = m.estimate(1 + j);
        let r = a.value / b.value;
        let cov = m.estimate(1 + k + j).value - a.value * b.value;
        let var = (a.se * a.se * nf - 2.0 * r * cov + r * r * var_b).max(0.0);
        estimates.push(r);
        se.push((var / nf).sqrt() / b.value.abs());
    }
    Ok(CorrelationSeries {
        lags: sequence.to_vec(),
        estimates,
        se,
        observable: f.label(),
        samples,
        normalized: true,
    })
}

/// Unnormalized `<U^n f, f>` at each lag, on shared samples.
pub fn koopman_series(
    sys: &BaseSystem,
    f: &Observable,
    lags: &[i64],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<CorrelationSeries> {
    f.check(sys)?;
    let m = mean_vector(
        purpose_seed(seed, Purpose::Koopman),
        samples,
        workers,
        lags.len(),
        |rng, out| {
            let x = sys.sample_point(rng);
            let fx = f.eval(sys, &x)?;
            for (o, &n) in out.iter_mut().zip(lags) {
                let (y, w) = sys.apply_with_cocycle(&x, n)?;
                *o = (0.5 * w.ln()).exp() * f.eval(sys, &y)? * fx;
            }
            Ok(())
        },
    )?;
    let est = m.estimates();
    Ok(CorrelationSeries {
        lags: lags.to_vec(),
        estimates: est.iter().map(|e| e.value).collect(),
        se: est.iter().map(|e| e.se).collect(),
        observable: f.label(),
        samples,
        normalized: false,
    })
}

/// `n_k = 2^k` for `k = kmin..=kmax`.
pub fn pow2_sequence(kmin: u32, kmax: u32) -> Vec<i64> {
    (kmin..=kmax).map(|k| 1i64 << k).collect()
}

/// A finitely supported coefficient vector `a`, as `(index, a_index)` pairs.
pub type Coefficients = [(i64, f64)];

fn split_coefficients(a: &Coefficients) -> (Vec<i64>, Vec<f64>) {
    a.iter().copied().unzip()
}

/// Lévy-Khinchine exponent `∫ (e^{i<a,x>} - 1 - i<a, c(x)>) dQ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LkExponent {
    /// Over the whole Lévy measure.
    pub full: Complex64,
    /// Over fibers above the cut, the exponent of a path truncated there.
    pub truncated: Complex64,
    /// Standard error of either value (real and imaginary parts combined).
    pub se: f64,
    /// Estimated contribution of fibers below the cut.
    pub omitted: Complex64,
}

/// Exponents for `θ a` over a grid of `θ`, estimated on shared base samples.
pub fn lk_exponent_grid(
    cfg: &StableConfig,
    a: &Coefficients,
    thetas: &[f64],
    eps: f64,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<LkExponent>> {
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(invalid("eps", "truncation must be positive"));
    }
    let (lags, coef) = split_coefficients(a);
    let g_len = thetas.len();
    let m = mean_vector(
        purpose_seed(seed, Purpose::LevyExponent),
        samples,
        workers,
        4 * g_len,
        |rng, out| {
            let omega = cfg.system.sample_point(rng);
            let g = cfg.process_orbit(&omega, &lags)?;
            let z0: f64 = coef.iter().zip(&g).map(|(x, y)| x * y).sum();
            for (j, &theta) in thetas.iter().enumerate() {
                let scaled: Vec<f64> = coef.iter().map(|c| c * theta).collect();
                let full = lk_fiber_integral(cfg.alpha, cfg.symmetric, &scaled, &g);
                let small = small_fiber_integral(theta * z0, eps, cfg.alpha);
                let omitted = if cfg.symmetric {
                    Complex64::new(2.0 * small.re, 0.0)
                } else {
                    small
                };
                out[4 * j] = full.re;
                out[4 * j + 1] = full.im;
                out[4 * j + 2] = omitted.re;
                out[4 * j + 3] = omitted.im;
            }
            Ok(())
        },
    )?;
    Ok((0..g_len)
        .map(|j| {
            let (re, im) = (m.estimate(4 * j), m.estimate(4 * j + 1));
            let full = Complex64::new(re.value, im.value);
            let omitted = Complex64::new(m.estimate(4 * j + 2).value, m.estimate(4 * j + 3).value);
            LkExponent {
                full,
                truncated: full - omitted,
                se: re.se.hypot(im.se),
                omitted,
            }
        })
        .collect())
}

/// Exponent at a single coefficient vector.
pub fn lk_exponent(
    cfg: &StableConfig,
    a: &Coefficients,
    eps: f64,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<LkExponent> {
    Ok(lk_exponent_grid(cfg, a, &[1.0], eps, samples, seed, workers)?[0])
}

/// Empirical characteristic function of `<θ a, X>` over simulated paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfGrid {
    pub coefficients: Vec<(i64, f64)>,
    pub thetas: Vec<f64>,
    pub values: Vec<Complex64>,
    pub se: Vec<f64>,
}

pub fn empirical_cf(paths: &PathBatch, a: &Coefficients, thetas: &[f64]) -> Result<CfGrid> {
    let cols: Vec<usize> = a
        .iter()
        .map(|(lag, _)| {
            paths
                .indices
                .iter()
                .position(|k| k == lag)
                .ok_or_else(|| invalid("coefficients", format!("lag {lag} was not simulated")))
        })
        .collect::<Result<_>>()?;
    let n = paths.paths.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { got: n, needed: 2 });
    }
    let proj: Vec<f64> = paths
        .paths
        .iter()
        .map(|p| cols.iter().zip(a).map(|(&c, (_, ak))| ak * p.values[c]).sum())
        .collect();
    let mut values = Vec::with_capacity(thetas.len());
    let mut se = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        if theta == 0.0 {
            values.push(Complex64::new(1.0, 0.0));
            se.push(0.0);
            continue;
        }
        let mut m = crate::mc::Moments::new(2);
        for &s in &proj {
            let (sin, cos) = (theta * s).sin_cos();
            m.push(&[cos, sin]);
        }
        let (c, s) = (m.estimate(0), m.estimate(1));
        values.push(Complex64::new(c.value, s.value));
        se.push(c.se.hypot(s.se));
    }
    Ok(CfGrid {
        coefficients: a.to_vec(),
        thetas: thetas.to_vec(),
        values,
        se,
    })
}

/// Per-θ comparison between the empirical CF and `exp(exponent)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfConsistency {
    pub thetas: Vec<f64>,
    pub empirical: Vec<Complex64>,
    pub empirical_se: Vec<f64>,
    pub predicted: Vec<Complex64>,
    pub gaps: Vec<f64>,
    /// Combined standard error of each gap.
    pub se: Vec<f64>,
    pub sup_gap: f64,
    pub sup_se: f64,
    /// Largest `|exp(full) - exp(truncated)|`, the bias a cut at `eps` would carry.
    pub truncation_effect: f64,
}

/// Compares simulated paths against the Lévy-Khinchine formula with
/// independent randomness for each side.
#[allow(clippy::too_many_arguments)]
pub fn cf_consistency(
    cfg: &StableConfig,
    a: &Coefficients,
    thetas: &[f64],
    opts: SimOptions,
    paths: usize,
    base_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<CfConsistency> {
    let (lags, _) = split_coefficients(a);
    let mut lags_sorted = lags.clone();
    lags_sorted.sort_unstable();
    lags_sorted.dedup();
    let sim = Simulator::with_indices(cfg, opts, &lags_sorted, seed, workers)?;
    let batch = sim.simulate(paths, seed, workers)?;
    let emp = empirical_cf(&batch, a, thetas)?;
    let lk = lk_exponent_grid(cfg, a, thetas, opts.eps, base_samples, seed, workers)?;
    let mut predicted = Vec::with_capacity(thetas.len());
    let mut gaps = Vec::with_capacity(thetas.len());
    let mut se = Vec::with_capacity(thetas.len());
    let mut truncation_effect: f64 = 0.0;
    for (j, e) in lk.iter().enumerate() {
        let p = e.truncated.exp();
        truncation_effect = truncation_effect.max((e.full.exp() - p).norm());
        gaps.push((emp.values[j] - p).norm());
        se.push(emp.se[j].hypot(p.norm() * e.se));
        predicted.push(p);
    }
    let (imax, sup_gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
    Ok(CfConsistency {
        thetas: thetas.to_vec(),
        empirical: emp.values,
        empirical_se: emp.se,
        predicted,
        sup_se: se[imax],
        gaps,
        se,
        sup_gap,
        truncation_effect,
    })
}

/// `C_Q(n) = ∫ (e^{i<a, S^n x>} - 1) conj(e^{i<a, x>} - 1) dQ`, fiber-integrated in closed form.
pub fn correlation_q(
    cfg: &StableConfig,
    a: &Coefficients,
    lags: &[i64],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<(Complex64, f64)>> {
    cfg.validate()?;
    let (idx, coef) = split_coefficients(a);
    let mut needed: Vec<i64> = Vec::new();
    for &n in lags {
        for &k in &idx {
            needed.push(k + n);
        }
    }
    needed.extend(&idx);
    needed.sort_unstable();
    needed.dedup();
    let pos = |k: i64| needed.binary_search(&k).expect("index collected above");
    let kap = kappa(cfg.alpha);
    let m = mean_vector(
        purpose_seed(seed, Purpose::CorrelationQ),
        samples,
        workers,
        2 * lags.len(),
        |rng, out| {
            let omega = cfg.system.sample_point(rng);
            let g = cfg.process_orbit(&omega, &needed)?;
            let v: f64 = idx.iter().zip(&coef).map(|(&k, c)| c * g[pos(k)]).sum();
            for (j, &n) in lags.iter().enumerate() {
                let u: f64 = idx.iter().zip(&coef).map(|(&k, c)| c * g[pos(k + n)]).sum();
                let val = if cfg.symmetric {
                    let p = |x: f64| x.abs().powf(cfg.alpha);
                    Complex64::new(2.0 * kap * (p(u) + p(v) - p(u - v)), 0.0)
                } else {
                    jtilde(u - v, cfg.alpha) - jtilde(u, cfg.alpha) - jtilde(-v, cfg.alpha)
                };
                out[2 * j] = val.re;
                out[2 * j + 1] = val.im;
            }
            Ok(())
        },
    )?;
    Ok((0..lags.len())
        .map(|j| {
            let (re, im) = (m.estimate(2 * j), m.estimate(2 * j + 1));
            (Complex64::new(re.value, im.value), re.se.hypot(im.se))
        })
        .collect())
}

/// `C_P(n) = Cov(e^{i<a, X∘S^n>}, e^{i<a, X>})` from simulated paths, with
/// influence-function standard errors.
pub fn correlation_p(paths: &PathBatch, a: &Coefficients, lags: &[i64]) -> Result<Vec<(Complex64, f64)>> {
    let col = |k: i64| {
        paths
            .indices
            .iter()
            .position(|&j| j == k)
            .ok_or_else(|| invalid("lags", format!("index {k} was not simulated")))
    };
    let base_cols: Vec<(usize, f64)> = a
        .iter()
        .map(|&(k, c)| Ok((col(k)?, c)))
        .collect::<Result<_>>()?;
    let n = paths.paths.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { got: n, needed: 2 });
    }
    let nf = n as f64;
    let phase = |p: &crate::simulator::PathSample, cols: &[(usize, f64)]| {
        let s: f64 = cols.iter().map(|&(c, ak)| ak * p.values[c]).sum();
        Complex64::from_polar(1.0, s)
    };
    let b: Vec<Complex64> = paths.paths.iter().map(|p| phase(p, &base_cols)).collect();
    let mean_b = b.iter().sum::<Complex64>() / nf;
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        let cols: Vec<(usize, f64)> = a
            .iter()
            .map(|&(k, c)| Ok((col(k + lag)?, c)))
            .collect::<Result<_>>()?;
        let av: Vec<Complex64> = paths.paths.iter().map(|p| phase(p, &cols)).collect();
        let mean_a = av.iter().sum::<Complex64>() / nf;
        let mean_ab = av.iter().zip(&b).map(|(x, y)| x * y.conj()).sum::<Complex64>() / nf;
        let c = mean_ab - mean_a * mean_b.conj();
        let mut ss = 0.0;
        for (x, y) in av.iter().zip(&b) {
            let psi = x * y.conj() - x * mean_b.conj() - mean_a * y.conj() - (c - mean_a * mean_b.conj());
            ss += psi.norm_sqr();
        }
        out.push((c, (ss / (nf - 1.0) / nf).sqrt()));
    }
    Ok(out)
}

/// Joint `(C_Q(n), C_P(n))` at one lag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdpCorrelation {
    pub lag: i64,
    pub q: Complex64,
    pub q_se: f64,
    pub p: Complex64,
    pub p_se: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn idp_rigidity_correlation(
    cfg: &StableConfig,
    a: &Coefficients,
    lags: &[i64],
    opts: SimOptions,
    paths: usize,
    base_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<IdpCorrelation>> {
    let q = correlation_q(cfg, a, lags, base_samples, seed, workers)?;
    let mut indices: Vec<i64> = lags
        .iter()
        .flat_map(|&n| a.iter().map(move |&(k, _)| k + n))
        .chain(a.iter().map(|&(k, _)| k))
        .collect();
    indices.sort_unstable();
    indices.dedup();
    let sim = Simulator::with_indices(cfg, opts, &indices, seed, workers)?;
    let batch = sim.simulate(paths, seed, workers)?;
    let p = correlation_p(&batch, a, lags)?;
    Ok(lags
        .iter()
        .zip(q.into_iter().zip(p))
        .map(|(&lag, ((q, q_se), (p, p_se)))| IdpCorrelation {
            lag,
            q,
            q_se,
            p,
            p_se,
        })
        .collect())
}
