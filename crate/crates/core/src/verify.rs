//! Invariant suites with measured tolerances, shared by the CLI and the tests.

use std::f64::consts::E;
use std::fmt;

use serde::Serialize;

use crate::base::{BaseSystem, Marginal};
use crate::error::{invalid, Result};
use crate::levy::{
    atom_dilation, sample_discrete_exponent, sample_unit_cell, scaling_check, fiber_scaling_identity,
    Functional, Observable, StableConfig, Window,
};
use crate::maharam::{fiber_mass, maharam_apply, pareto_sample, span, MaharamPoint};
use crate::mc::mean_vector;
use crate::rng::{purpose_seed, purpose_stream, Purpose};
use crate::stats::ks_two_sample;

/// One measured invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Passing requires `measured <= tolerance` (or `>` for p-values, see `kind`).
    pub tolerance: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Absolute error against a bound.
    Error,
    /// Deviation in standard errors.
    ZScore,
    /// A p-value that must exceed the level.
    PValue,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64, kind: CheckKind) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            kind,
            pass: measured <= tolerance,
        }
    }

    pub fn p_value(name: impl Into<String>, p: f64, level: f64) -> Self {
        Self {
            name: name.into(),
            measured: p,
            tolerance: level,
            kind: CheckKind::PValue,
            pass: p > level,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let (label, op) = match self.kind {
            CheckKind::Error => ("error", "<="),
            CheckKind::ZScore => ("z", "<="),
            CheckKind::PValue => ("p", ">"),
        };
        write!(
            f,
            "{verdict} {} {label}={:.3e} (need {op} {:.3e})",
            self.name, self.measured, self.tolerance
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {c}", self.suite)?;
        }
        write!(
            f,
            "[{}] {}",
            self.suite,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

pub const Z_LIMIT: f64 = 4.0;
pub const COCYCLE_TOL: f64 = 1e-10;
pub const DUAL_RN_TOL: f64 = 1e-12;
pub const EXACT_TOL: f64 = 1e-12;
pub const KS_LEVEL: f64 = 0.01;

/// Chain rule `log w_{n+m}(x) = log w_n(x) + log w_m(T^n x)` over random
/// `(x, n, m)`, and for the odometer the two derivative routes for `|m| <= max_m`.
pub fn cocycle_suite(
    systems: &[BaseSystem],
    trials: usize,
    max_step: i64,
    dual_trials: usize,
    max_m: i64,
    seed: u64,
) -> Result<Report> {
    let mut checks = Vec::new();
    for (s, sys) in systems.iter().enumerate() {
        let mut rng = purpose_stream(seed, Purpose::Cocycle, s as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let x = sys.sample_point(&mut rng);
            let n = rand::Rng::random_range(&mut rng, -max_step..=max_step);
            let m = rand::Rng::random_range(&mut rng, -max_step..=max_step);
            let (y, wn) = sys.apply_with_cocycle(&x, n)?;
            let wm = sys.rn_cocycle(&y, m)?;
            let wnm = sys.rn_cocycle(&x, n + m)?;
            let err = (wnm.ln() - wn.ln() - wm.ln()).abs();
            worst = worst.max(err);
        }
        checks.push(Check::at_most(
            format!("{} chain rule over {trials} triples", sys.name()),
            worst,
            COCYCLE_TOL,
            CheckKind::Error,
        ));
        if let BaseSystem::Odometer(odo) = sys {
            let log_lambda = odo.lambda().ln();
            let mut worst: f64 = 0.0;
            for j in 0..dual_trials {
                let x = odo.sample_point(&mut rng);
                // cover the extremes deterministically, random lags otherwise
                let m = match j {
                    0 => max_m,
                    1 => -max_m,
                    _ => rand::Rng::random_range(&mut rng, -max_m..=max_m),
                };
                let (_, flips) = odo.apply_with_exponent(&x, m)?;
                let telescoped = odo.exponent_telescoping(&x, m)?;
                worst = worst.max(((flips - telescoped) as f64 * log_lambda).abs());
            }
            checks.push(Check::at_most(
                format!("odometer dual derivative for |m| <= {max_m}"),
                worst,
                DUAL_RN_TOL,
                CheckKind::Error,
            ));
        }
    }
    Ok(Report {
        suite: "cocycle".into(),
        checks,
    })
}

/// Fiber kernel of a product test function `h(w) k(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FiberKernel {
    Indicator { lo: f64, hi: f64 },
    Sine { lo: f64, hi: f64 },
    Decay { lo: f64, hi: f64 },
}

impl FiberKernel {
    fn support(&self) -> (f64, f64) {
        match *self {
            FiberKernel::Indicator { lo, hi }
            | FiberKernel::Sine { lo, hi }
            | FiberKernel::Decay { lo, hi } => (lo, hi),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return 0.0;
        }
        match self {
            FiberKernel::Indicator { .. } => 1.0,
            FiberKernel::Sine { .. } => t.sin(),
            FiberKernel::Decay { .. } => (-t).exp(),
        }
    }
}

/// Five bounded product functionals suited to `sys`.
pub fn quasi_invariance_functionals(sys: &BaseSystem) -> Vec<(Observable, FiberKernel)> {
    use FiberKernel::*;
    let h: [Observable; 4] = match sys {
        BaseSystem::Odometer(_) => [
            Observable::Bit { i: 1 },
            Observable::DyadicSum,
            Observable::Bit { i: 2 },
            Observable::DyadicSum,
        ],
        BaseSystem::DissipativeTranslation { .. } => [
            Observable::SiteIndicator { k: 0 },
            Observable::SiteIndicator { k: 1 },
            Observable::SiteIndicator { k: -1 },
            Observable::SiteIndicator { k: 2 },
        ],
        _ => [
            Observable::Coordinate,
            Observable::CosCoordinate { k: 1 },
            Observable::SinCoordinate { k: 1 },
            Observable::CenteredProduct,
        ],
    };
    let [h1, h2, h3, h4] = h;
    vec![
        (Observable::One, Indicator { lo: 1.0, hi: 2.0 }),
        (h1, Indicator { lo: 0.5, hi: 3.0 }),
        (h2, Sine { lo: 0.2, hi: 5.0 }),
        (h3, Decay { lo: 0.1, hi: 10.0 }),
        (h4, Indicator { lo: 1.0, hi: 1.5 }),
    ]
}

/// Largest value of `w_1`, which bounds how far one forward step can lift a fiber.
fn forward_rn_bound(sys: &BaseSystem) -> f64 {
    match sys {
        BaseSystem::Odometer(o) => 1.0 / o.lambda(),
        BaseSystem::DissipativeTranslation { r } => 1.0 / r,
        _ => 1.0,
    }
}

/// `∫ F∘T̃ dν = ∫ F dν` for `ν = μ ⊗ t^(-1-α) dt`, on paired samples. Fibers
/// are drawn above `δ = lo · max(w_1)^(-1/α)`, below which neither side can
/// reach the support of `F`.
pub fn quasi_invariance_suite(
    sys: &BaseSystem,
    alphas: &[f64],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Report> {
    let mut checks = Vec::new();
    let functionals = quasi_invariance_functionals(sys);
    let wmax = forward_rn_bound(sys);
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (j, (h, k)) in functionals.iter().enumerate() {
            h.check(sys)?;
            let (lo, _) = k.support();
            let delta = lo * wmax.powf(-1.0 / alpha);
            let mass = fiber_mass(delta, alpha, false)?;
            let s = crate::rng::derive_seed(purpose_seed(seed, Purpose::QuasiInvariance), (ai * 16 + j) as u64);
            let m = mean_vector(s, samples, workers, 3, |rng, out| {
                let x = sys.sample_point(rng);
                let t = pareto_sample(delta, alpha, rng)?;
                let pt = MaharamPoint::multiplicative(x, t);
                let img = maharam_apply(sys, alpha, &pt, 1)?;
                let t1 = img.t().expect("multiplicative fiber");
                let lhs = h.eval(sys, &img.base)? * k.eval(t1);
                let rhs = h.eval(sys, &pt.base)? * k.eval(t);
                out[0] = lhs;
                out[1] = rhs;
                out[2] = lhs - rhs;
                Ok(())
            })?;
            let d = m.estimate(2).scaled(mass);
            let z = if d.value == 0.0 { 0.0 } else { d.value.abs() / d.se };
            checks.push(Check::at_most(
                format!("alpha={alpha} F{} = {} x {:?}", j + 1, h.label(), k),
                z,
                Z_LIMIT,
                CheckKind::ZScore,
            ));
        }
    }
    Ok(Report {
        suite: "quasi-invariance".into(),
        checks,
    })
}

/// Configurations used by the self-similarity suite.
pub fn self_similarity_configs(alpha: f64) -> Result<Vec<StableConfig>> {
    let w = Window::new(0, 1)?;
    Ok(vec![
        StableConfig::symmetric(alpha, BaseSystem::odometer(2.0 / 3.0)?, Observable::DyadicSum, w)?,
        StableConfig::symmetric(
            alpha,
            BaseSystem::bernoulli(Marginal::Uniform)?,
            Observable::Coordinate,
            w,
        )?,
        StableConfig::new(
            alpha,
            BaseSystem::translation(0.5)?,
            Observable::One,
            Default::default(),
            false,
            w,
        )?,
    ])
}

/// `∫ F(x/c) dQ = c^(-α) ∫ F dQ`: exactly on fiber intervals and by paired
/// Monte-Carlo on window functionals.
pub fn self_similarity_suite(
    alpha: f64,
    cs: &[f64],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Report> {
    let mut checks = Vec::new();
    let intervals = [(1e-3, 2e-3), (0.5, 3.0), (1.0, 1e3), (7.0, 7.5)];
    for &c in cs {
        let worst = intervals
            .iter()
            .map(|&(a, b)| {
                let (l, r) = fiber_scaling_identity(a, b, c, alpha);
                (l - r).abs() / r.abs()
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("c={c} fiber identity (relative)"),
            worst,
            EXACT_TOL,
            CheckKind::Error,
        ));
    }
    let functionals = [
        Functional::Band { lo: 1.0, hi: 3.0 },
        Functional::SignedBand { lo: 0.5, hi: 2.0 },
        Functional::BandCos { lo: 1.0, hi: 4.0, lag: 1 },
        Functional::Excess { lo: 1.0 },
        Functional::Ratio { lo: 1.0, lag: 1 },
    ];
    for (ci, cfg) in self_similarity_configs(alpha)?.iter().enumerate() {
        let sup = cfg.f.sup_norm(&cfg.system).ok_or_else(|| invalid("f", "must be bounded"))?;
        for (ki, &c) in cs.iter().enumerate() {
            for (fi, func) in functionals.iter().enumerate() {
                let eps = func.support_floor() * c.min(1.0) / sup;
                let s = crate::rng::derive_seed(seed, (ci * 256 + ki * 16 + fi) as u64);
                let r = scaling_check(cfg, c, func, eps, samples, s, workers)?;
                checks.push(Check::at_most(
                    format!("{} c={c} {func:?}", cfg.system.name()),
                    r.z,
                    Z_LIMIT,
                    CheckKind::ZScore,
                ));
            }
        }
    }
    Ok(Report {
        suite: "self-similarity".into(),
        checks,
    })
}

/// Default dilations: `1/2`, `2`, and `e`.
pub const DEFAULT_DILATIONS: [f64; 3] = [0.5, 2.0, E];

/// Atom-mass dilation by the span, and the randomized discrete fiber against
/// the continuous Pareto fiber on `[1, ∞)`.
pub fn semi_stable_suite(lambda: f64, alphas: &[f64], samples: usize, seed: u64) -> Result<Report> {
    let mut checks = Vec::new();
    for (ai, &alpha) in alphas.iter().enumerate() {
        let b = span(lambda, alpha)?;
        let worst = (-20..=20)
            .map(|k| {
                let (l, r) = atom_dilation(b, k, alpha);
                (l - r).abs() / r
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("alpha={alpha} b={b:.6} atom dilation (relative)"),
            worst,
            EXACT_TOL,
            CheckKind::Error,
        ));
        let mut rng = purpose_stream(seed, Purpose::SemiStable, ai as u64);
        let mut lifted = Vec::with_capacity(samples);
        for _ in 0..samples {
            let k = sample_discrete_exponent(b, alpha, 0, &mut rng)?;
            lifted.push((k as f64 * b.ln()).exp() * sample_unit_cell(b, alpha, &mut rng));
        }
        let mut rng = purpose_stream(seed, Purpose::SemiStable, 1000 + ai as u64);
        let continuous: Vec<f64> = (0..samples)
            .map(|_| pareto_sample(1.0, alpha, &mut rng))
            .collect::<Result<_>>()?;
        let ks = ks_two_sample(&lifted, &continuous)?;
        checks.push(Check::p_value(
            format!("alpha={alpha} randomized discrete fiber vs Pareto (KS, D={:.4})", ks.statistic),
            ks.p_value,
            KS_LEVEL,
        ));
    }
    Ok(Report {
        suite: "semi-stable".into(),
        checks,
    })
}
