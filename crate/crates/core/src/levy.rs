//! The Lévy measure of a stationary stable process as the image of the
//! Maharam extension under the orbit map
//! `(w, t) -> (t * a_n(w) * w_n(w)^(1/α) * f(T^n w))_n`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, CocycleValue, Marginal};
use crate::error::{invalid, Error, Result};
use crate::integrals::{drift_integral, jtilde, kappa, levy_integral_constant};
use crate::maharam::{
    atom_mass, check_alpha, check_lattice, fiber_mass, pareto_sample, span, Fiber, MaharamPoint,
};
use crate::mc::{mean_vector, Estimate};
use crate::rng::{open01, purpose_seed, Purpose, SimRng};

/// Built-in spectral functions on base points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Observable {
    One,
    Constant { c: f64 },
    /// `sum_{i <= 64} w_i 2^-i` on dyadic points.
    DyadicSum,
    /// `1{w_i = 1}` on dyadic points.
    Bit { i: usize },
    /// `x_0` on shift points.
    Coordinate,
    /// `x_0 - E x_0`.
    CenteredCoordinate,
    /// `cos(2π k x_0)`.
    CosCoordinate { k: u32 },
    /// `sin(2π k x_0)`.
    SinCoordinate { k: u32 },
    /// `1{x_0 <= c} - P(x_0 <= c)`.
    CenteredIndicatorBelow { c: f64 },
    /// `(x_0 - m)(x_1 - m)`.
    CenteredProduct,
    /// `1{x = k}` on sites.
    SiteIndicator { k: i64 },
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::One => "one".into(),
            Observable::Constant { c } => format!("constant({c})"),
            Observable::DyadicSum => "dyadic_sum".into(),
            Observable::Bit { i } => format!("bit({i})"),
            Observable::Coordinate => "coordinate".into(),
            Observable::CenteredCoordinate => "centered_coordinate".into(),
            Observable::CosCoordinate { k } => format!("cos_coordinate({k})"),
            Observable::SinCoordinate { k } => format!("sin_coordinate({k})"),
            Observable::CenteredIndicatorBelow { c } => format!("centered_indicator_below({c})"),
            Observable::CenteredProduct => "centered_product".into(),
            Observable::SiteIndicator { k } => format!("site_indicator({k})"),
        }
    }

    fn mismatch(&self, sys: &BaseSystem) -> Error {
        Error::ObservableMismatch {
            observable: self.label(),
            system: sys.name(),
        }
    }

    /// Fails if the observable cannot be evaluated on points of `sys`.
    pub fn check(&self, sys: &BaseSystem) -> Result<()> {
        let ok = match self {
            Observable::One | Observable::Constant { .. } => true,
            Observable::DyadicSum => matches!(sys, BaseSystem::Odometer(_)),
            Observable::Bit { i } => matches!(sys, BaseSystem::Odometer(_)) && *i >= 1,
            Observable::SiteIndicator { .. } => {
                matches!(sys, BaseSystem::DissipativeTranslation { .. })
            }
            _ => sys.marginal().is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(self.mismatch(sys))
        }
    }

    pub fn eval(&self, sys: &BaseSystem, x: &BasePoint) -> Result<f64> {
        let coord = |s: &crate::base::ShiftPoint, m: &Marginal, k: i64| s.coordinate(m, k);
        match (self, x) {
            (Observable::One, _) => Ok(1.0),
            (Observable::Constant { c }, _) => Ok(*c),
            (Observable::DyadicSum, BasePoint::Dyadic(d)) => Ok(d.dyadic_sum()),
            (Observable::Bit { i }, BasePoint::Dyadic(d)) if *i >= 1 => Ok(f64::from(d.bit(*i))),
            (Observable::SiteIndicator { k }, BasePoint::Site(s)) => Ok(f64::from(u8::from(s == k))),
            (_, BasePoint::Shift(s)) => {
                let m = sys.marginal().ok_or_else(|| self.mismatch(sys))?;
                let x0 = coord(s, m, 0);
                match self {
                    Observable::Coordinate => Ok(x0),
                    Observable::CenteredCoordinate => Ok(x0 - m.mean()),
                    Observable::CosCoordinate { k } => Ok((TAU * f64::from(*k) * x0).cos()),
                    Observable::SinCoordinate { k } => Ok((TAU * f64::from(*k) * x0).sin()),
                    Observable::CenteredIndicatorBelow { c } => {
                        Ok(f64::from(u8::from(x0 <= *c)) - m.cdf(*c))
                    }
                    Observable::CenteredProduct => {
                        Ok((x0 - m.mean()) * (coord(s, m, 1) - m.mean()))
                    }
                    _ => Err(self.mismatch(sys)),
                }
            }
            _ => Err(self.mismatch(sys)),
        }
    }

    /// `sup |f|`, if finite.
    pub fn sup_norm(&self, sys: &BaseSystem) -> Option<f64> {
        let centered_sup = |m: &Marginal| match m {
            Marginal::StandardNormal => None,
            _ => Some(m.mean().max(1.0 - m.mean())),
        };
        match self {
            Observable::One
            | Observable::DyadicSum
            | Observable::Bit { .. }
            | Observable::SiteIndicator { .. }
            | Observable::CosCoordinate { .. }
            | Observable::SinCoordinate { .. }
            | Observable::CenteredIndicatorBelow { .. } => Some(1.0),
            Observable::Constant { c } => Some(c.abs()),
            Observable::Coordinate => match sys.marginal()? {
                Marginal::StandardNormal => None,
                _ => Some(1.0),
            },
            Observable::CenteredCoordinate => centered_sup(sys.marginal()?),
            Observable::CenteredProduct => centered_sup(sys.marginal()?).map(|s| s * s),
        }
    }
}

/// Sign cocycle generators `ξ: Ω -> {-1, +1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCocycle {
    #[default]
    Plus,
    /// `(-1)^{w_1}` on dyadic points.
    Bit1,
    /// `sign(x_0 - E x_0)` on shift points.
    CoordinateSign,
    /// `(-1)^x` on sites.
    SiteParity,
}

/// Number of odd integers in `[lo, hi)`.
fn odd_count(lo: i64, hi: i64) -> i64 {
    let below = |v: i64| v.div_euclid(2);
    below(hi) - below(lo)
}

impl SignCocycle {
    pub fn check(&self, sys: &BaseSystem) -> Result<()> {
        let ok = match self {
            SignCocycle::Plus => true,
            SignCocycle::Bit1 => matches!(sys, BaseSystem::Odometer(_)),
            SignCocycle::CoordinateSign => sys.marginal().is_some(),
            SignCocycle::SiteParity => matches!(sys, BaseSystem::DissipativeTranslation { .. }),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(
                "xi",
                format!("sign cocycle {self:?} is not defined on `{}`", sys.name()),
            ))
        }
    }

    pub fn value(&self, sys: &BaseSystem, x: &BasePoint) -> Result<f64> {
        match (self, x) {
            (SignCocycle::Plus, _) => Ok(1.0),
            (SignCocycle::Bit1, BasePoint::Dyadic(d)) => Ok(if d.bit(1) == 1 { -1.0 } else { 1.0 }),
            (SignCocycle::SiteParity, BasePoint::Site(k)) => {
                Ok(if k.rem_euclid(2) == 1 { -1.0 } else { 1.0 })
            }
            (SignCocycle::CoordinateSign, BasePoint::Shift(s)) => {
                let m = sys.marginal().ok_or_else(|| invalid("xi", "shift marginal missing"))?;
                Ok(if s.coordinate(m, 0) >= m.mean() { 1.0 } else { -1.0 })
            }
            _ => Err(invalid("xi", "sign cocycle does not match the point kind")),
        }
    }

    /// `a_n(x)`: the product of `ξ(T^k x)` over `0 <= k < n` for `n > 0` and over
    /// `n <= k < 0` for `n < 0`.
    pub fn product(&self, sys: &BaseSystem, x: &BasePoint, n: i64) -> Result<f64> {
        let (lo, hi) = (n.min(0), n.max(0));
        let parity = |count: i64| if count.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        match (self, x) {
            (SignCocycle::Plus, _) => Ok(1.0),
            (SignCocycle::Bit1, BasePoint::Dyadic(d)) => {
                let b = i64::from(d.bit(1));
                Ok(parity(odd_count(b + lo, b + hi)))
            }
            (SignCocycle::SiteParity, BasePoint::Site(k)) => {
                Ok(parity(odd_count(k + lo, k + hi)))
            }
            (SignCocycle::CoordinateSign, BasePoint::Shift(_)) => {
                let mut prod = 1.0;
                for k in lo..hi {
                    prod *= self.value(sys, &sys.apply(x, k)?)?;
                }
                Ok(prod)
            }
            _ => Err(invalid("xi", "sign cocycle does not match the point kind")),
        }
    }
}

/// Inclusive index range `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start > end {
            return Err(invalid("window", format!("empty window {start}:{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> Vec<i64> {
        (self.start..=self.end).collect()
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| invalid("window", format!("expected start:end, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<i64>()
                .map_err(|e| invalid("window", format!("`{v}`: {e}")))
        };
        Window::new(parse(a)?, parse(b)?)
    }
}

/// A stationary stable process specified by its spectral data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableConfig {
    pub alpha: f64,
    pub system: BaseSystem,
    pub f: Observable,
    #[serde(default)]
    pub xi: SignCocycle,
    pub symmetric: bool,
    pub window: Window,
}

impl StableConfig {
    pub fn new(
        alpha: f64,
        system: BaseSystem,
        f: Observable,
        xi: SignCocycle,
        symmetric: bool,
        window: Window,
    ) -> Result<Self> {
        let cfg = Self {
            alpha,
            system,
            f,
            xi,
            symmetric,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Symmetric configuration with `ξ = +1` over `window`.
    pub fn symmetric(alpha: f64, system: BaseSystem, f: Observable, window: Window) -> Result<Self> {
        Self::new(alpha, system, f, SignCocycle::Plus, true, window)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.system.validate()?;
        self.f.check(&self.system)?;
        self.xi.check(&self.system)?;
        Window::new(self.window.start, self.window.end)?;
        if !self.symmetric && self.xi != SignCocycle::Plus {
            return Err(invalid("xi", "a sign cocycle requires a symmetric configuration"));
        }
        Ok(())
    }

    /// Estimates `P(|f| > 0)` and `∫ |f|^α dμ`; refuses an a.e. vanishing `f`.
    pub fn validate_empirical(&self, seed: u64, n: usize, workers: usize) -> Result<(Estimate, Estimate)> {
        let m = mean_vector(purpose_seed(seed, Purpose::Validation), n, workers, 2, |rng, out| {
            let x = self.system.sample_point(rng);
            let v = self.f.eval(&self.system, &x)?;
            out[0] = f64::from(u8::from(v != 0.0));
            out[1] = v.abs().powf(self.alpha);
            Ok(())
        })?;
        let (support, moment) = (m.estimate(0), m.estimate(1));
        if support.value == 0.0 {
            return Err(invalid("f", "spectral function vanishes on every sampled point"));
        }
        if !moment.value.is_finite() {
            return Err(invalid("f", "∫|f|^α dμ estimate is not finite"));
        }
        Ok((support, moment))
    }

    /// `(T^n w, w_n(w))` and the unit-fiber orbit values `a_n w_n^(1/α) f(T^n w)`
    /// at each index; `a_n` enters only when `with_sign` is set.
    pub fn unit_orbit(
        &self,
        omega: &BasePoint,
        indices: &[i64],
        with_sign: bool,
    ) -> Result<(Vec<f64>, Vec<CocycleValue>)> {
        let mut values = Vec::with_capacity(indices.len());
        let mut cocycles = Vec::with_capacity(indices.len());
        for &n in indices {
            let (y, w) = self.system.apply_with_cocycle(omega, n)?;
            let mut v = (w.ln() / self.alpha).exp() * self.f.eval(&self.system, &y)?;
            if with_sign && self.xi != SignCocycle::Plus {
                v *= self.xi.product(&self.system, omega, n)?;
            }
            values.push(v);
            cocycles.push(w);
        }
        Ok((values, cocycles))
    }

    /// Unit-fiber orbit values used by the process: `ξ` enters in symmetric configs.
    pub fn process_orbit(&self, omega: &BasePoint, indices: &[i64]) -> Result<Vec<f64>> {
        Ok(self.unit_orbit(omega, indices, self.symmetric)?.0)
    }
}

/// Values of the orbit map on a window, with the fiber and cocycles used.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitWindow {
    pub indices: Vec<i64>,
    pub values: Vec<f64>,
    pub fiber: f64,
    pub cocycles: Vec<CocycleValue>,
}

impl OrbitWindow {
    pub fn value_at(&self, n: i64) -> Option<f64> {
        self.indices.iter().position(|&k| k == n).map(|j| self.values[j])
    }
}

fn multiplicative_fiber(pt: &MaharamPoint) -> Result<f64> {
    pt.t()
        .ok_or_else(|| invalid("fiber", "the orbit map takes a multiplicative fiber"))
}

/// `x_n = t w_n(w)^(1/α) f(T^n w)` over `indices`.
pub fn theta_orbit_at(cfg: &StableConfig, pt: &MaharamPoint, indices: &[i64]) -> Result<OrbitWindow> {
    let t = multiplicative_fiber(pt)?;
    let (unit, cocycles) = cfg.unit_orbit(&pt.base, indices, false)?;
    Ok(OrbitWindow {
        indices: indices.to_vec(),
        values: unit.into_iter().map(|g| t * g).collect(),
        fiber: t,
        cocycles,
    })
}

/// The orbit map over the configured window.
pub fn theta_orbit(cfg: &StableConfig, pt: &MaharamPoint) -> Result<OrbitWindow> {
    theta_orbit_at(cfg, pt, &cfg.window.indices())
}

/// `x_n = sign * a_n(w) * t * w_n(w)^(1/α) * f(T^n w)` over the configured window.
pub fn sym_orbit(cfg: &StableConfig, pt: &MaharamPoint, sign: f64) -> Result<OrbitWindow> {
    if !cfg.symmetric {
        return Err(invalid("symmetric", "sym_orbit needs a symmetric configuration"));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(invalid("sign", format!("sign must be ±1, got {sign}")));
    }
    let t = multiplicative_fiber(pt)?;
    let indices = cfg.window.indices();
    let (unit, cocycles) = cfg.unit_orbit(&pt.base, &indices, true)?;
    Ok(OrbitWindow {
        indices,
        values: unit.into_iter().map(|g| sign * t * g).collect(),
        fiber: t,
        cocycles,
    })
}

/// `C_α · ∫ |f|^α dμ`, the value of `∫ min(x_0^2, 1) dQ`.
pub fn levy_integrability(cfg: &StableConfig, seed: u64, n: usize, workers: usize) -> Result<Estimate> {
    let (_, moment) = cfg.validate_empirical(seed, n, workers)?;
    let c = levy_integral_constant(cfg.alpha);
    Ok(moment.scaled(if cfg.symmetric { 2.0 * c } else { c }))
}

/// Lévy-Khinchine integrand at a base point after exact integration over the
/// fiber: `∫ (e^{i<a,x>} - 1 - i<a, c(x)>) dt` (both signs in symmetric configs),
/// where `x = t g` and `g` is the unit orbit on the support of `a`.
pub fn lk_fiber_integral(alpha: f64, symmetric: bool, a: &[f64], g: &[f64]) -> Complex64 {
    let z: f64 = a.iter().zip(g).map(|(x, y)| x * y).sum();
    if symmetric {
        return Complex64::new(-2.0 * kappa(alpha) * z.abs().powf(alpha), 0.0);
    }
    let drift: f64 = a
        .iter()
        .zip(g)
        .map(|(ak, gk)| ak * drift_integral(*gk, alpha))
        .sum();
    jtilde(z, alpha) - Complex64::new(0.0, drift)
}

/// Bounded test functionals of a process window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `1{lo <= |x_0| <= hi}`.
    Band { lo: f64, hi: f64 },
    /// `sign(x_0) 1{lo <= |x_0| <= hi}`.
    SignedBand { lo: f64, hi: f64 },
    /// `1{lo <= |x_0| <= hi} cos(x_lag)`.
    BandCos { lo: f64, hi: f64, lag: i64 },
    /// `1{|x_0| > lo} (1 - lo / |x_0|)`.
    Excess { lo: f64 },
    /// `1{|x_0| > lo} min(1, |x_lag| / |x_0|)`.
    Ratio { lo: f64, lag: i64 },
}

impl Functional {
    /// `δ` with `F = 0` on `{|x_0| <= δ}`.
    pub fn support_floor(&self) -> f64 {
        match *self {
            Functional::Band { lo, .. }
            | Functional::SignedBand { lo, .. }
            | Functional::BandCos { lo, .. }
            | Functional::Excess { lo }
            | Functional::Ratio { lo, .. } => lo,
        }
    }

    /// Indices of the window the functional reads, `0` first.
    pub fn lags(&self) -> Vec<i64> {
        match *self {
            Functional::BandCos { lag, .. } | Functional::Ratio { lag, .. } if lag != 0 => {
                vec![0, lag]
            }
            _ => vec![0],
        }
    }

    /// Evaluates on values at `self.lags()`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let a = x[0].abs();
        let band = |lo: f64, hi: f64| f64::from(u8::from(a >= lo && a <= hi));
        let other = || *x.get(1).unwrap_or(&x[0]);
        match *self {
            Functional::Band { lo, hi } => band(lo, hi),
            Functional::SignedBand { lo, hi } => x[0].signum() * band(lo, hi),
            Functional::BandCos { lo, hi, .. } => band(lo, hi) * other().cos(),
            Functional::Excess { lo } => {
                if a > lo {
                    1.0 - lo / a
                } else {
                    0.0
                }
            }
            Functional::Ratio { lo, .. } => {
                if a > lo {
                    (other().abs() / a).min(1.0)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Outcome of a self-similarity test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs - rhs`.
    pub se: f64,
    pub z: f64,
}

/// Compares `∫ F(x / c) dQ` with `c^(-α) ∫ F(x) dQ` on shared samples of
/// `(w, t)`, `t > eps`. Refuses functionals whose support reaches below the
/// sampled fiber region on either side.
pub fn scaling_check(
    cfg: &StableConfig,
    c: f64,
    functional: &Functional,
    eps: f64,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<ScalingCheck> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("dilation must be positive, got {c}")));
    }
    let delta = functional.support_floor();
    let sup = cfg.f.sup_norm(&cfg.system).ok_or_else(|| {
        Error::BiasedConfiguration(format!(
            "`{}` is unbounded, so no fiber cut keeps {{|x_0| > δ}} fully sampled",
            cfg.f.label()
        ))
    })?;
    // |x_0| = t |f(w)| <= t sup|f|, and F(x/c) needs |x_0| > c δ.
    if delta * c.min(1.0) < eps * sup {
        return Err(Error::BiasedConfiguration(format!(
            "support floor δ = {delta} with c = {c} reaches |x_0| = {} but fibers below eps = {eps} \
             are not sampled (need δ·min(1, c) >= eps·sup|f| = {})",
            delta * c.min(1.0),
            eps * sup
        )));
    }
    let lags = functional.lags();
    let mass = fiber_mass(eps, cfg.alpha, cfg.symmetric)?;
    let scale = c.powf(-cfg.alpha);
    let m = mean_vector(purpose_seed(seed, Purpose::ScalingLhs), n, workers, 3, |rng, out| {
        let omega = cfg.system.sample_point(rng);
        let t = pareto_sample(eps, cfg.alpha, rng)?;
        let sign = random_sign(cfg.symmetric, rng);
        let g = cfg.process_orbit(&omega, &lags)?;
        let x: Vec<f64> = g.iter().map(|v| sign * t * v).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v / c).collect();
        let lhs = functional.eval(&scaled);
        let rhs = scale * functional.eval(&x);
        out[0] = lhs;
        out[1] = rhs;
        out[2] = lhs - rhs;
        Ok(())
    })?;
    let (lhs, rhs, diff) = (m.estimate(0), m.estimate(1), m.estimate(2));
    let se = diff.se * mass;
    let gap = (lhs.value - rhs.value) * mass;
    Ok(ScalingCheck {
        lhs: lhs.value * mass,
        rhs: rhs.value * mass,
        se,
        z: if gap == 0.0 { 0.0 } else { gap.abs() / se },
    })
}

/// `(∫_{ca}^{cb} s^(-1-α) ds, c^(-α) ∫_a^b s^(-1-α) ds)`.
pub fn fiber_scaling_identity(a: f64, b: f64, c: f64, alpha: f64) -> (f64, f64) {
    use crate::maharam::pareto_interval_mass;
    (
        pareto_interval_mass(c * a, c * b, alpha),
        c.powf(-alpha) * pareto_interval_mass(a, b, alpha),
    )
}

pub(crate) fn random_sign<R: RngCore + ?Sized>(symmetric: bool, rng: &mut R) -> f64 {
    if symmetric && rng.next_u64() >> 63 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `β = ∫_1^b s^(-1-α) ds = (1 - b^(-α)) / α`.
pub fn semistable_beta(b: f64, alpha: f64) -> f64 {
    -(-alpha * b.ln()).exp_m1() / alpha
}

/// Draw from `s^(-1-α) / β` on `[1, b)`.
pub fn sample_unit_cell<R: RngCore + ?Sized>(b: f64, alpha: f64, rng: &mut R) -> f64 {
    let v = open01(rng);
    let q = -(-alpha * b.ln()).exp_m1();
    (1.0 - v * q).powf(-1.0 / alpha)
}

/// Exponent `k >= k0` with probability proportional to the atom mass `b^(-α k)`.
pub fn sample_discrete_exponent<R: RngCore + ?Sized>(b: f64, alpha: f64, k0: i64, rng: &mut R) -> Result<i64> {
    let q = -(-alpha * b.ln()).exp_m1();
    let j = Geometric::new(q).map_err(|e| invalid("span", e.to_string()))?.sample(rng);
    Ok(k0 + j as i64)
}

/// Lifts `(w, b^k)` to `(w, b^k u)` with `u` drawn from the unit cell.
pub fn randomize_semistable<R: RngCore + ?Sized>(
    b: f64,
    alpha: f64,
    pt: &MaharamPoint,
    rng: &mut R,
) -> Result<MaharamPoint> {
    check_alpha(alpha)?;
    let Fiber::Discrete(k) = pt.fiber else {
        return Err(invalid("fiber", "randomization lifts discrete fibers"));
    };
    let u = sample_unit_cell(b, alpha, rng);
    Ok(MaharamPoint::multiplicative(
        pt.base.clone(),
        (k as f64 * b.ln()).exp() * u,
    ))
}

/// Discrete orbit values `b^{k - E_n} f(T^n w)` with `w_n(w) = λ^{E_n}`.
pub fn semistable_orbit(cfg: &StableConfig, lambda: f64, pt: &MaharamPoint) -> Result<(OrbitWindow, Vec<i64>)> {
    check_lattice(&cfg.system, lambda)?;
    let b = span(lambda, cfg.alpha)?;
    let Fiber::Discrete(k) = pt.fiber else {
        return Err(invalid("fiber", "the semi-stable orbit takes a discrete fiber"));
    };
    let indices = cfg.window.indices();
    let mut values = Vec::with_capacity(indices.len());
    let mut exponents = Vec::with_capacity(indices.len());
    let mut cocycles = Vec::with_capacity(indices.len());
    for &n in &indices {
        let (y, w) = cfg.system.apply_with_cocycle(&pt.base, n)?;
        let e = w
            .exponent()
            .ok_or_else(|| invalid("system", "derivative is not a lattice power"))?;
        let fiber_exp = k - e;
        values.push((fiber_exp as f64 * b.ln()).exp() * cfg.f.eval(&cfg.system, &y)?);
        exponents.push(fiber_exp);
        cocycles.push(w);
    }
    Ok((
        OrbitWindow {
            indices,
            values,
            fiber: (k as f64 * b.ln()).exp(),
            cocycles,
        },
        exponents,
    ))
}

/// `(m_b(b G), b^(-α) m_b(G))` for the atom `G = {b^k}`.
pub fn atom_dilation(b: f64, k: i64, alpha: f64) -> (f64, f64) {
    (atom_mass(b, k + 1, alpha), b.powf(-alpha) * atom_mass(b, k, alpha))
}

/// Draws `(w, t)` under `μ ⊗ t^(-1-α) dt` restricted to `t > eps`, plus a sign.
pub fn sample_levy_point(cfg: &StableConfig, eps: f64, rng: &mut SimRng) -> Result<(MaharamPoint, f64)> {
    let omega = cfg.system.sample_point(rng);
    let t = pareto_sample(eps, cfg.alpha, rng)?;
    let sign = random_sign(cfg.symmetric, rng);
    Ok((MaharamPoint::multiplicative(omega, t), sign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::DyadicPoint;
    use crate::rng::stream;

    fn odo_cfg(alpha: f64, xi: SignCocycle) -> StableConfig {
        StableConfig::new(
            alpha,
            BaseSystem::odometer(2.0 / 3.0).unwrap(),
            Observable::DyadicSum,
            xi,
            true,
            Window::new(-3, 3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_f_on_shift_gives_constant_orbit() {
        let cfg = StableConfig::symmetric(
            1.2,
            BaseSystem::bernoulli(Marginal::Uniform).unwrap(),
            Observable::One,
            Window::new(0, 5).unwrap(),
        )
        .unwrap();
        let x = cfg.system.sample_point(&mut stream(1, 0));
        let w = theta_orbit(&cfg, &MaharamPoint::multiplicative(x, 2.5)).unwrap();
        assert!(w.values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn sign_products_match_direct_products() {
        let cfg = odo_cfg(1.0, SignCocycle::Bit1);
        let mut rng = stream(2, 0);
        for _ in 0..200 {
            let x = cfg.system.sample_point(&mut rng);
            for n in -6i64..=6 {
                let mut direct = 1.0;
                let (lo, hi) = (n.min(0), n.max(0));
                for k in lo..hi {
                    direct *= cfg.xi.value(&cfg.system, &cfg.system.apply(&x, k).unwrap()).unwrap();
                }
                assert_eq!(cfg.xi.product(&cfg.system, &x, n).unwrap(), direct);
            }
        }
    }

    #[test]
    fn sym_orbit_sign_flip() {
        let cfg = odo_cfg(1.5, SignCocycle::Bit1);
        let x = DyadicPoint::sample(2.0 / 3.0, &mut stream(3, 0));
        let pt = MaharamPoint::multiplicative(BasePoint::Dyadic(x), 1.7);
        let plus = sym_orbit(&cfg, &pt, 1.0).unwrap();
        let minus = sym_orbit(&cfg, &pt, -1.0).unwrap();
        for (a, b) in plus.values.iter().zip(&minus.values) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn semistable_constants() {
        let b = span(0.5, 1.0).unwrap();
        assert_eq!(b, 2.0);
        assert!((semistable_beta(b, 1.0) - 0.5).abs() < 1e-15);
        let (lhs, rhs) = atom_dilation(b, 3, 1.0);
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn unit_cell_sampler_range() {
        let mut rng = stream(4, 0);
        for _ in 0..10_000 {
            let u = sample_unit_cell(2.0, 1.3, &mut rng);
            assert!((1.0..2.0).contains(&u));
        }
    }

    #[test]
    fn scaling_check_refuses_unsampled_support() {
        let cfg = odo_cfg(1.0, SignCocycle::Plus);
        let f = Functional::Band { lo: 0.1, hi: 1.0 };
        let err = scaling_check(&cfg, 0.5, &f, 0.25, 100, 1, 1).unwrap_err();
        assert!(matches!(err, Error::BiasedConfiguration(_)));
    }

    #[test]
    fn scaling_check_unit_dilation_is_exact() {
        let cfg = odo_cfg(1.0, SignCocycle::Plus);
        let f = Functional::Band { lo: 1.0, hi: 3.0 };
        let r = scaling_check(&cfg, 1.0, &f, 0.5, 5000, 1, 1).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert_eq!(r.z, 0.0);
    }

    #[test]
    fn window_parsing() {
        let w: Window = "-32:32".parse().unwrap();
        assert_eq!(w.len(), 65);
        assert!("3:1".parse::<Window>().is_err());
        assert!("3".parse::<Window>().is_err());
    }

    #[test]
    fn asymmetric_xi_is_rejected() {
        let r = StableConfig::new(
            1.0,
            BaseSystem::odometer(0.7).unwrap(),
            Observable::DyadicSum,
            SignCocycle::Bit1,
            false,
            Window::new(0, 0).unwrap(),
        );
        assert!(r.is_err());
    }
}
