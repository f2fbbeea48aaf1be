//! Nonsingular base systems with exact Radon-Nikodym cocycles.
//!
//! Every system `T` on `(Omega, mu)` exposes the iterated derivative
//! `w_n(x) = d(T^n)_*^{-1} mu / d mu (x)`, i.e. the density of `A -> mu(T^n A)`
//! with respect to `mu`. The cocycle identity `w_{n+m}(x) = w_n(x) w_m(T^n x)`
//! holds exactly in the log domain.

mod dyadic;

use rand::RngCore;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

pub use dyadic::{
    odometer_apply, odometer_rn, phi, DyadicPoint, Odometer, DEFAULT_DEPTH_CAP, INITIAL_DEPTH,
};

use crate::error::{invalid, Error, Result};
use crate::rng::{counter_rng, open01};

/// Value of a Radon-Nikodym cocycle, kept in the log domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CocycleValue {
    /// `exp(log_base)^exponent`, exact for systems with lattice-valued derivatives.
    Lattice { exponent: i64, log_base: f64 },
    Real { log_value: f64 },
}

impl CocycleValue {
    pub const ONE: CocycleValue = CocycleValue::Real { log_value: 0.0 };

    pub fn lattice(exponent: i64, base: f64) -> Self {
        CocycleValue::Lattice {
            exponent,
            log_base: base.ln(),
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            CocycleValue::Lattice { exponent, log_base } => exponent as f64 * log_base,
            CocycleValue::Real { log_value } => log_value,
        }
    }

    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    /// Integer exponent if the value is a lattice power; the unit counts as exponent 0.
    pub fn exponent(&self) -> Option<i64> {
        match *self {
            CocycleValue::Lattice { exponent, .. } => Some(exponent),
            CocycleValue::Real { log_value } if log_value == 0.0 => Some(0),
            CocycleValue::Real { .. } => None,
        }
    }

    /// Product of two derivatives.
    pub fn compose(self, other: CocycleValue) -> CocycleValue {
        match (self, other) {
            (
                CocycleValue::Lattice { exponent: a, log_base },
                CocycleValue::Lattice { exponent: b, log_base: lb },
            ) if log_base == lb => CocycleValue::Lattice {
                exponent: a + b,
                log_base,
            },
            (CocycleValue::Real { log_value }, other) | (other, CocycleValue::Real { log_value })
                if log_value == 0.0 =>
            {
                other
            }
            (a, b) => CocycleValue::Real {
                log_value: a.ln() + b.ln(),
            },
        }
    }

    pub fn inverse(self) -> CocycleValue {
        match self {
            CocycleValue::Lattice { exponent, log_base } => CocycleValue::Lattice {
                exponent: -exponent,
                log_base,
            },
            CocycleValue::Real { log_value } => CocycleValue::Real {
                log_value: -log_value,
            },
        }
    }
}

/// One-dimensional law of the coordinates of a Bernoulli shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Marginal {
    Uniform,
    StandardNormal,
    /// Values in {0, 1} with `P(1) = q`.
    Coin { q: f64 },
}

impl Marginal {
    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Uniform => 0.5,
            Marginal::StandardNormal => 0.0,
            Marginal::Coin { q } => q,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Uniform => 1.0 / 12.0,
            Marginal::StandardNormal => 1.0,
            Marginal::Coin { q } => q * (1.0 - q),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform => x.clamp(0.0, 1.0),
            Marginal::StandardNormal => 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2),
            Marginal::Coin { q } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - q
                } else {
                    1.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Coin { q } if !(q > 0.0 && q < 1.0) => {
                Err(invalid("q", format!("coin probability must lie in (0, 1), got {q}")))
            }
            _ => Ok(()),
        }
    }

    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform => open01(rng),
            Marginal::StandardNormal => StandardNormal.sample(rng),
            Marginal::Coin { q } => f64::from(u8::from(open01(rng) < q)),
        }
    }
}

/// A point of a two-sided i.i.d. sequence space, viewed through a shift offset.
/// Coordinate `k` of the underlying sequence is a pure function of `(seed, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftPoint {
    pub seed: u64,
    pub offset: i64,
}

impl ShiftPoint {
    /// Coordinate `k` of the shifted sequence, i.e. `x_{offset + k}`.
    pub fn coordinate(&self, marginal: &Marginal, k: i64) -> f64 {
        let index = self.offset.wrapping_add(k) as u64;
        marginal.draw(&mut counter_rng(self.seed, index))
    }
}

/// A point of one of the built-in systems.
#[derive(Clone, Debug, PartialEq)]
pub enum BasePoint {
    Dyadic(DyadicPoint),
    Shift(ShiftPoint),
    Site(i64),
}

impl BasePoint {
    pub fn kind(&self) -> &'static str {
        match self {
            BasePoint::Dyadic(_) => "dyadic",
            BasePoint::Shift(_) => "shift",
            BasePoint::Site(_) => "site",
        }
    }
}

/// The built-in nonsingular systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSystem {
    /// Dyadic odometer under the biased product measure.
    Odometer(Odometer),
    /// Left shift on i.i.d. sequences; measure preserving.
    BernoulliShift { marginal: Marginal },
    /// `x -> x + 1` on the integers with `mu(k)` proportional to `r^|k|`.
    /// Totally dissipative, derivatives are integer powers of `r`.
    DissipativeTranslation { r: f64 },
    /// The identity on the sequence space of a Bernoulli shift.
    Identity { marginal: Marginal },
}

impl BaseSystem {
    pub fn odometer(p: f64) -> Result<Self> {
        Ok(BaseSystem::Odometer(Odometer::new(p)?))
    }

    pub fn bernoulli(marginal: Marginal) -> Result<Self> {
        marginal.validate()?;
        Ok(BaseSystem::BernoulliShift { marginal })
    }

    pub fn translation(r: f64) -> Result<Self> {
        let sys = BaseSystem::DissipativeTranslation { r };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseSystem::Odometer(o) => Odometer::new(o.p).map(|_| ()),
            BaseSystem::BernoulliShift { marginal } | BaseSystem::Identity { marginal } => {
                marginal.validate()
            }
            BaseSystem::DissipativeTranslation { r } => {
                if *r > 0.0 && *r < 1.0 {
                    Ok(())
                } else {
                    Err(invalid("r", format!("translation weight ratio must lie in (0, 1), got {r}")))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseSystem::Odometer(_) => "odometer",
            BaseSystem::BernoulliShift { .. } => "bernoulli_shift",
            BaseSystem::DissipativeTranslation { .. } => "dissipative_translation",
            BaseSystem::Identity { .. } => "identity",
        }
    }

    pub fn is_measure_preserving(&self) -> bool {
        matches!(
            self,
            BaseSystem::BernoulliShift { .. } | BaseSystem::Identity { .. }
        )
    }

    /// The number whose integer powers contain every derivative value, if any.
    pub fn lattice_base(&self) -> Option<f64> {
        match self {
            BaseSystem::Odometer(o) => Some(o.lambda()),
            BaseSystem::DissipativeTranslation { r } => Some(*r),
            _ => None,
        }
    }

    pub fn marginal(&self) -> Option<&Marginal> {
        match self {
            BaseSystem::BernoulliShift { marginal } | BaseSystem::Identity { marginal } => {
                Some(marginal)
            }
            _ => None,
        }
    }

    pub fn sample_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> BasePoint {
        match self {
            BaseSystem::Odometer(o) => BasePoint::Dyadic(o.sample_point(rng)),
            BaseSystem::BernoulliShift { .. } | BaseSystem::Identity { .. } => {
                BasePoint::Shift(ShiftPoint {
                    seed: rng.next_u64(),
                    offset: 0,
                })
            }
            BaseSystem::DissipativeTranslation { r } => BasePoint::Site(sample_site(*r, rng)),
        }
    }

    fn mismatch(&self, x: &BasePoint) -> Error {
        Error::PointMismatch {
            point: x.kind(),
            system: self.name(),
        }
    }

    /// `T^n x`.
    pub fn apply(&self, x: &BasePoint, n: i64) -> Result<BasePoint> {
        Ok(self.apply_with_cocycle(x, n)?.0)
    }

    /// `w_n(x)`.
    pub fn rn_cocycle(&self, x: &BasePoint, n: i64) -> Result<CocycleValue> {
        Ok(self.apply_with_cocycle(x, n)?.1)
    }

    /// `(T^n x, w_n(x))` in one pass.
    pub fn apply_with_cocycle(&self, x: &BasePoint, n: i64) -> Result<(BasePoint, CocycleValue)> {
        match (self, x) {
            (BaseSystem::Odometer(o), BasePoint::Dyadic(d)) => {
                let (y, e) = o.apply_with_exponent(d, n)?;
                Ok((BasePoint::Dyadic(y), CocycleValue::lattice(e, o.lambda())))
            }
            (BaseSystem::BernoulliShift { .. }, BasePoint::Shift(s)) => Ok((
                BasePoint::Shift(ShiftPoint {
                    seed: s.seed,
                    offset: s.offset.wrapping_add(n),
                }),
                CocycleValue::ONE,
            )),
            (BaseSystem::Identity { .. }, BasePoint::Shift(s)) => {
                Ok((BasePoint::Shift(*s), CocycleValue::ONE))
            }
            (BaseSystem::DissipativeTranslation { r }, BasePoint::Site(k)) => {
                let y = k
                    .checked_add(n)
                    .ok_or_else(|| invalid("n", "translation overflows i64"))?;
                let e = y.unsigned_abs() as i64 - k.unsigned_abs() as i64;
                Ok((BasePoint::Site(y), CocycleValue::lattice(e, *r)))
            }
            _ => Err(self.mismatch(x)),
        }
    }

    /// Upper bound of `w_n` over all points and all `|n| <= 1`, when one exists.
    pub fn one_step_rn_bound(&self) -> Option<f64> {
        match self {
            BaseSystem::DissipativeTranslation { r } => Some(1.0 / r),
            BaseSystem::Odometer(_) => None,
            _ => Some(1.0),
        }
    }
}

/// `P(k) = (1 - r) / (1 + r) * r^|k|`.
fn sample_site<R: RngCore + ?Sized>(r: f64, rng: &mut R) -> i64 {
    let p0 = (1.0 - r) / (1.0 + r);
    let u = open01(rng);
    if u < p0 {
        return 0;
    }
    let magnitude = 1 + Geometric::new(1.0 - r)
        .expect("r lies in (0, 1)")
        .sample(rng) as i64;
    if rng.next_u64() & 1 == 0 {
        magnitude
    } else {
        -magnitude
    }
}

/// `mu(k)` for the dissipative translation.
pub fn site_mass(r: f64, k: i64) -> f64 {
    (1.0 - r) / (1.0 + r) * r.powi(k.unsigned_abs().min(i32::MAX as u64) as i32)
}
