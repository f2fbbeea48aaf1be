//! Stationary stable paths as compensated Poisson sums over the Lévy measure.
//!
//! A path is `X_n = sum_i σ_i t_i g_n(w_i) - comp_n`, summed over a Poisson
//! configuration of `(w_i, t_i, σ_i)` with intensity `μ ⊗ t^(-1-α) dt`
//! (times uniform signs when symmetric), restricted to `t > eps`. Here
//! `g_n(w) = a_n(w) w_n(w)^(1/α) f(T^n w)` is the unit-fiber orbit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::base::BasePoint;
use crate::error::{invalid, Error, Result};
use crate::integrals::clipped_tail;
use crate::levy::{random_sign, StableConfig};
use crate::maharam::{check_alpha, fiber_mass, pareto_sample};
use crate::mc::{mean_vector, run_chunks, Estimate};
use crate::rng::{open01, purpose_seed, Purpose, SimRng};

/// `c(x) = max(-1, min(x, 1))`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TruncationFn;

impl TruncationFn {
    pub fn apply(&self, x: f64) -> f64 {
        x.clamp(-1.0, 1.0)
    }
}

/// How fibers in `(eps, t_split]` are represented.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SmallJumps {
    /// Every point with `t > eps` is sampled.
    Truncate,
    /// Points with `t > t_split` are sampled, where `t_split` carries
    /// `mean_points` expected points; the sum over `(eps, t_split]` is replaced
    /// by a Gaussian vector with the same covariance. Symmetric configs only.
    Gaussian { mean_points: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub eps: f64,
    /// Largest admissible expected number of sampled points per path.
    pub point_budget: f64,
    pub small_jumps: SmallJumps,
    /// Base samples used for compensators and small-jump covariances.
    pub base_samples: usize,
}

impl SimOptions {
    pub fn truncated(eps: f64) -> Self {
        Self {
            eps,
            point_budget: 1e7,
            small_jumps: SmallJumps::Truncate,
            base_samples: 100_000,
        }
    }

    pub fn gaussian(eps: f64, mean_points: f64) -> Self {
        Self {
            small_jumps: SmallJumps::Gaussian { mean_points },
            ..Self::truncated(eps)
        }
    }
}

/// One atom of the Poisson configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonPoint {
    pub omega: BasePoint,
    pub t: f64,
    pub sign: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSample {
    pub points: Vec<PoissonPoint>,
    pub eps: f64,
    /// Total intensity `Λ(eps)`.
    pub mass: f64,
}

impl PoissonSample {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

fn budget_error(cfg: &StableConfig, mass: f64, budget: f64) -> Error {
    let sides = if cfg.symmetric { 2.0 } else { 1.0 };
    Error::PointBudgetExceeded {
        expected: mass,
        budget,
        eps_needed: (budget * cfg.alpha / sides).powf(-1.0 / cfg.alpha),
    }
}

/// Poisson configuration on `{t > eps}` with intensity `μ ⊗ t^(-1-α) dt`.
pub fn sample_poisson_points(
    cfg: &StableConfig,
    eps: f64,
    point_budget: f64,
    rng: &mut SimRng,
) -> Result<PoissonSample> {
    let mass = fiber_mass(eps, cfg.alpha, cfg.symmetric)?;
    if mass > point_budget {
        return Err(budget_error(cfg, mass, point_budget));
    }
    let count = poisson_count(mass, rng)?;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let omega = cfg.system.sample_point(rng);
        let t = pareto_sample(eps, cfg.alpha, rng)?;
        let sign = random_sign(cfg.symmetric, rng);
        points.push(PoissonPoint { omega, t, sign });
    }
    Ok(PoissonSample { points, eps, mass })
}

fn poisson_count(mass: f64, rng: &mut SimRng) -> Result<usize> {
    if mass == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mass).map_err(|e| invalid("eps", e.to_string()))?;
    Ok(d.sample(rng) as usize)
}

/// `∫_Ω ∫_eps^∞ c(t g_n(w)) t^(-1-α) dt μ(dw)` for each index; exactly zero
/// in symmetric configs.
pub fn compensator(
    cfg: &StableConfig,
    eps: f64,
    indices: &[i64],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<Estimate>> {
    if cfg.symmetric {
        return Ok(vec![Estimate::exact(0.0); indices.len()]);
    }
    fiber_mass(eps, cfg.alpha, false)?;
    let m = mean_vector(
        purpose_seed(seed, Purpose::Compensator),
        n,
        workers,
        indices.len(),
        |rng, out| {
            let omega = cfg.system.sample_point(rng);
            let g = cfg.process_orbit(&omega, indices)?;
            for (o, gn) in out.iter_mut().zip(g) {
                *o = clipped_tail(gn, eps, cfg.alpha);
            }
            Ok(())
        },
    )?;
    Ok(m.estimates())
}

/// Gaussian stand-in for the small fibers: `sqrt(V) L Z` with `L L^T ≈ K`.
#[derive(Clone, Debug)]
struct GaussianPart {
    factor: DMatrix<f64>,
}

/// A simulated path on a set of indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub values: Vec<f64>,
    /// Poisson points realized for this path.
    pub point_count: usize,
}

/// Paths simulated under one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBatch {
    pub indices: Vec<i64>,
    pub paths: Vec<PathSample>,
    pub eps: f64,
    pub seed: u64,
    pub compensator: Vec<Estimate>,
}

impl PathBatch {
    pub fn point_count(&self) -> usize {
        self.paths.iter().map(|p| p.point_count).sum()
    }

    /// Values at index position `j` across paths.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.values[j]).collect()
    }
}

/// Precomputed simulation state for one configuration and index set.
#[derive(Clone, Debug)]
pub struct Simulator {
    cfg: StableConfig,
    opts: SimOptions,
    indices: Vec<i64>,
    /// Fibers above this cut are sampled as points.
    cut: f64,
    mass: f64,
    gaussian: Option<GaussianPart>,
    compensator: Vec<Estimate>,
}

impl Simulator {
    /// Simulator over the configured window.
    pub fn new(cfg: &StableConfig, opts: SimOptions, seed: u64, workers: usize) -> Result<Self> {
        Self::with_indices(cfg, opts, &cfg.window.indices(), seed, workers)
    }

    pub fn with_indices(
        cfg: &StableConfig,
        opts: SimOptions,
        indices: &[i64],
        seed: u64,
        workers: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        check_alpha(cfg.alpha)?;
        if indices.is_empty() {
            return Err(invalid("window", "no indices to simulate"));
        }
        let full_mass = fiber_mass(opts.eps, cfg.alpha, cfg.symmetric)?;
        let sides = if cfg.symmetric { 2.0 } else { 1.0 };
        let (cut, gaussian) = match opts.small_jumps {
            SmallJumps::Truncate => {
                if full_mass > opts.point_budget {
                    return Err(budget_error(cfg, full_mass, opts.point_budget));
                }
                (opts.eps, None)
            }
            SmallJumps::Gaussian { mean_points } => {
                if !cfg.symmetric {
                    return Err(Error::Unsupported(
                        "Gaussian small jumps are implemented for symmetric configs".into(),
                    ));
                }
                if !(mean_points > 0.0) {
                    return Err(invalid("mean_points", "must be positive"));
                }
                if mean_points > opts.point_budget {
                    return Err(budget_error(cfg, mean_points, opts.point_budget));
                }
                let split = (mean_points * cfg.alpha / sides).powf(-1.0 / cfg.alpha);
                if split <= opts.eps {
                    (opts.eps, None)
                } else {
                    let g = gaussian_factor(cfg, opts, split, indices, seed, workers)?;
                    (split, Some(g))
                }
            }
        };
        let compensator = compensator(cfg, opts.eps, indices, opts.base_samples, seed, workers)?;
        Ok(Self {
            cfg: cfg.clone(),
            opts,
            indices: indices.to_vec(),
            cut,
            mass: fiber_mass(cut, cfg.alpha, cfg.symmetric)?,
            gaussian,
            compensator,
        })
    }

    pub fn config(&self) -> &StableConfig {
        &self.cfg
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn compensator(&self) -> &[Estimate] {
        &self.compensator
    }

    /// Fiber above which points are sampled individually.
    pub fn point_cut(&self) -> f64 {
        self.cut
    }

    /// Expected sampled points per path.
    pub fn expected_points(&self) -> f64 {
        self.mass
    }

    pub fn sample_path(&self, rng: &mut SimRng) -> Result<PathSample> {
        let count = poisson_count(self.mass, rng)?;
        let mut values: Vec<f64> = self.compensator.iter().map(|c| -c.value).collect();
        for _ in 0..count {
            let omega = self.cfg.system.sample_point(rng);
            let t = pareto_sample(self.cut, self.cfg.alpha, rng)?;
            let s = random_sign(self.cfg.symmetric, rng) * t;
            let g = self.cfg.process_orbit(&omega, &self.indices)?;
            for (v, gn) in values.iter_mut().zip(g) {
                *v += s * gn;
            }
        }
        if let Some(gp) = &self.gaussian {
            let z: DVector<f64> =
                DVector::from_fn(gp.factor.ncols(), |_, _| StandardNormal.sample(rng));
            let y = &gp.factor * z;
            for (v, yn) in values.iter_mut().zip(y.iter()) {
                *v += yn;
            }
        }
        Ok(PathSample {
            values,
            point_count: count,
        })
    }

    /// `paths` independent paths; path `i` depends only on `(seed, i)`.
    pub fn simulate(&self, paths: usize, seed: u64, workers: usize) -> Result<PathBatch> {
        let chunks = run_chunks(purpose_seed(seed, Purpose::Paths), paths, workers, |rng, range| {
            range.map(|_| self.sample_path(rng)).collect::<Result<Vec<_>>>()
        })?;
        Ok(PathBatch {
            indices: self.indices.clone(),
            paths: chunks.into_iter().flatten().collect(),
            eps: self.opts.eps,
            seed,
            compensator: self.compensator.clone(),
        })
    }
}

/// Factor of the small-fiber covariance `V K`, with
/// `V = 2 ∫_eps^split t^(1-α) dt` and `K(n, m) = E_μ[g_n g_m]`.
fn gaussian_factor(
    cfg: &StableConfig,
    opts: SimOptions,
    split: f64,
    indices: &[i64],
    seed: u64,
    workers: usize,
) -> Result<GaussianPart> {
    let d = indices.len();
    let two_minus = 2.0 - cfg.alpha;
    let v = 2.0 * (split.powf(two_minus) - opts.eps.powf(two_minus)) / two_minus;
    let pairs = d * (d + 1) / 2;
    let m = mean_vector(
        purpose_seed(seed, Purpose::Covariance),
        opts.base_samples,
        workers,
        pairs,
        |rng, out| {
            let omega = cfg.system.sample_point(rng);
            let g = cfg.process_orbit(&omega, indices)?;
            let mut p = 0;
            for i in 0..d {
                for j in 0..=i {
                    out[p] = g[i] * g[j];
                    p += 1;
                }
            }
            Ok(())
        },
    )?;
    let mut k = DMatrix::zeros(d, d);
    let mut p = 0;
    for i in 0..d {
        for j in 0..=i {
            let e = m.estimate(p).value * v;
            k[(i, j)] = e;
            k[(j, i)] = e;
            p += 1;
        }
    }
    let eig = SymmetricEigen::new(k);
    let mut factor = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    Ok(GaussianPart { factor })
}

/// Convenience wrapper: one truncated path over the configured window.
pub fn simulate_path(cfg: &StableConfig, eps: f64, rng: &mut SimRng) -> Result<PathSample> {
    let opts = SimOptions::truncated(eps);
    Simulator::new(cfg, opts, rng.next_u64(), 1)?.sample_path(rng)
}

/// Chambers-Mallows-Stuck draw of a symmetric α-stable variable with
/// characteristic function `exp(-|scale θ|^α)`.
pub fn cms_oracle<R: RngCore + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let v = PI * open01(rng) - FRAC_PI_2;
    let x = if alpha == 1.0 {
        v.tan()
    } else {
        let w = -open01(rng).ln();
        (alpha * v).sin() / v.cos().powf(1.0 / alpha)
            * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
    };
    scale * x
}
