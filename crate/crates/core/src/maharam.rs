//! Maharam extensions of a base system.
//!
//! The multiplicative extension `(w, t) -> (T w, t * w_1(w)^(1/α))` preserves
//! `mu ⊗ t^(-1-α) dt`. The additive form uses `s = -α ln t`, where the fiber
//! measure becomes a multiple of `e^s ds` and the map is `s -> s - ln w_1`.
//! The discrete form lives on `G_b = {b^k}` with `b = λ^(-1/α)` and moves the
//! exponent by the integer cocycle exponent.

use rand::RngCore;
use rand_distr::{Distribution, Pareto};

use crate::base::{BasePoint, BaseSystem};
use crate::error::{invalid, Error, Result};

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("stability index must lie in (0, 2), got {alpha}")))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid("eps", format!("truncation must be positive and finite, got {eps}")))
    }
}

/// Fiber coordinate of a Maharam point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fiber {
    /// `t > 0` under `t^(-1-α) dt`.
    Multiplicative(f64),
    /// `s` under `e^s ds`.
    Additive(f64),
    /// Exponent `k` of `g = b^k` under `sum_g g^(-α) δ_g`.
    Discrete(i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaharamPoint {
    pub base: BasePoint,
    pub fiber: Fiber,
}

impl MaharamPoint {
    pub fn multiplicative(base: BasePoint, t: f64) -> Self {
        Self {
            base,
            fiber: Fiber::Multiplicative(t),
        }
    }

    pub fn discrete(base: BasePoint, k: i64) -> Self {
        Self {
            base,
            fiber: Fiber::Discrete(k),
        }
    }

    /// The multiplicative fiber value, if the point is in that coordinate.
    pub fn t(&self) -> Option<f64> {
        match self.fiber {
            Fiber::Multiplicative(t) => Some(t),
            _ => None,
        }
    }
}

/// Representation of the fiber measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiberRepr {
    Additive,
    Multiplicative,
    Discrete { span: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberLaw {
    pub alpha: f64,
    pub repr: FiberRepr,
}

impl FiberLaw {
    pub fn new(alpha: f64, repr: FiberRepr) -> Result<Self> {
        check_alpha(alpha)?;
        if let FiberRepr::Discrete { span } = repr {
            if !(span > 1.0 && span.is_finite()) {
                return Err(invalid("span", format!("span must exceed 1, got {span}")));
            }
        }
        Ok(Self { alpha, repr })
    }

    /// Mass of the fiber interval `[lo, hi)` in the law's own coordinate.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self.repr {
            FiberRepr::Additive => hi.exp() - lo.exp(),
            FiberRepr::Multiplicative => pareto_interval_mass(lo.max(0.0), hi, self.alpha),
            FiberRepr::Discrete { span } => {
                if hi <= 0.0 {
                    return 0.0;
                }
                let k_lo = if lo <= 0.0 {
                    return f64::INFINITY;
                } else {
                    (lo.ln() / span.ln()).ceil() as i64
                };
                let mut mass = 0.0;
                let mut k = k_lo;
                while span.powi(k as i32) < hi {
                    if span.powi(k as i32) >= lo {
                        mass += atom_mass(span, k, self.alpha);
                    }
                    k += 1;
                }
                mass
            }
        }
    }
}

/// `∫_lo^hi t^(-1-α) dt`.
pub fn pareto_interval_mass(lo: f64, hi: f64, alpha: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let upper = if hi.is_infinite() { 0.0 } else { hi.powf(-alpha) };
    (lo.powf(-alpha) - upper) / alpha
}

/// `m_b({b^k}) = (b^k)^(-α)`.
pub fn atom_mass(span: f64, k: i64, alpha: f64) -> f64 {
    (-(k as f64) * alpha * span.ln()).exp()
}

/// Span `b = λ^(-1/α)` of the discrete extension.
pub fn span(lambda: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid("lambda", format!("lattice base must lie in (0, 1), got {lambda}")));
    }
    Ok(lambda.powf(-1.0 / alpha))
}

/// `T̃_α^n (w, t) = (T^n w, t * w_n(w)^(1/α))`; additive fibers move by `-ln w_n`.
pub fn maharam_apply(
    sys: &BaseSystem,
    alpha: f64,
    pt: &MaharamPoint,
    n: i64,
) -> Result<MaharamPoint> {
    check_alpha(alpha)?;
    let (base, w) = sys.apply_with_cocycle(&pt.base, n)?;
    let fiber = match pt.fiber {
        Fiber::Multiplicative(t) => Fiber::Multiplicative(t * (w.ln() / alpha).exp()),
        Fiber::Additive(s) => Fiber::Additive(s - w.ln()),
        Fiber::Discrete(_) => {
            return Err(Error::Unsupported(
                "discrete fibers move with discrete_maharam_apply".into(),
            ))
        }
    };
    Ok(MaharamPoint { base, fiber })
}

/// Discrete extension on `G_b`, `b = λ^(-1/α)`: with `w_n = λ^E` the fiber
/// exponent becomes `k - E`.
pub fn discrete_maharam_apply(
    sys: &BaseSystem,
    lambda: f64,
    pt: &MaharamPoint,
    n: i64,
) -> Result<MaharamPoint> {
    check_lattice(sys, lambda)?;
    let Fiber::Discrete(k) = pt.fiber else {
        return Err(invalid("fiber", "discrete extension needs a discrete fiber"));
    };
    let (base, w) = sys.apply_with_cocycle(&pt.base, n)?;
    let e = w.exponent().ok_or_else(|| {
        invalid("system", "derivative is not an integer power of the lattice base")
    })?;
    Ok(MaharamPoint {
        base,
        fiber: Fiber::Discrete(k - e),
    })
}

/// Accepts systems whose derivatives are powers of `lambda`; measure-preserving
/// systems qualify with exponent 0.
pub fn check_lattice(sys: &BaseSystem, lambda: f64) -> Result<()> {
    if sys.is_measure_preserving() {
        return Ok(());
    }
    match sys.lattice_base() {
        Some(base) if ((base.ln() - lambda.ln()) / lambda.ln()).abs() < 1e-12 => Ok(()),
        Some(base) => Err(invalid(
            "lambda",
            format!("system derivatives are powers of {base}, not of {lambda}"),
        )),
        None => Err(invalid(
            "system",
            format!("`{}` has no lattice-valued derivative", sys.name()),
        )),
    }
}

/// The scaling flow `S_c (w, t) = (w, c t)`.
pub fn scaling_flow(pt: &MaharamPoint, c: f64) -> Result<MaharamPoint> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("scaling factor must be positive, got {c}")));
    }
    match pt.fiber {
        Fiber::Multiplicative(t) => Ok(MaharamPoint {
            base: pt.base.clone(),
            fiber: Fiber::Multiplicative(c * t),
        }),
        _ => Err(Error::Unsupported(
            "the scaling flow acts on multiplicative fibers".into(),
        )),
    }
}

/// `t = e^(-s/α)`.
pub fn additive_to_multiplicative(s: f64, alpha: f64) -> f64 {
    (-s / alpha).exp()
}

/// `s = -α ln t`.
pub fn multiplicative_to_additive(t: f64, alpha: f64) -> f64 {
    -alpha * t.ln()
}

/// Mass of `t^(-1-α) dt` on `(eps, ∞)`, doubled for two signs.
pub fn fiber_mass(eps: f64, alpha: f64, symmetric: bool) -> Result<f64> {
    check_eps(eps)?;
    check_alpha(alpha)?;
    let one_sided = eps.powf(-alpha) / alpha;
    Ok(if symmetric { 2.0 * one_sided } else { one_sided })
}

/// Draw from the normalized restriction of `t^(-1-α) dt` to `(eps, ∞)`.
pub fn pareto_sample<R: RngCore + ?Sized>(eps: f64, alpha: f64, rng: &mut R) -> Result<f64> {
    check_eps(eps)?;
    check_alpha(alpha)?;
    Ok(Pareto::new(eps, alpha)
        .map_err(|e| invalid("alpha", e.to_string()))?
        .sample(rng))
}
