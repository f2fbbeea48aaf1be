//! Closed forms of the fiber integrals against `t^(-1-α) dt` on `(0, ∞)`.
//!
//! Every stable functional of the process reduces to one-dimensional integrals
//! of this kind once the base point is fixed, so the Monte-Carlo estimators
//! only average over the base.

use num_complex::Complex64;
use statrs::consts::EULER_MASCHERONI;
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::{FRAC_PI_2, PI};

/// Below this distance from 1, α-dependent quotients switch to series.
const NEAR_ONE: f64 = 1e-5;

/// `(1 - y^x) / x` for `y > 0`, continuous at `x = 0` (value `-ln y`).
fn one_minus_pow_over(y: f64, x: f64) -> f64 {
    if x == 0.0 {
        -y.ln()
    } else {
        -(x * y.ln()).exp_m1() / x
    }
}

/// `κ_α = ∫_0^∞ (1 - cos u) u^(-1-α) du`.
pub fn kappa(alpha: f64) -> f64 {
    let x = 1.0 - alpha;
    let ratio = if x == 0.0 {
        FRAC_PI_2
    } else {
        (FRAC_PI_2 * x).sin() / x
    };
    gamma(2.0 - alpha) * ratio / alpha
}

/// `K_α = ∫_0^∞ (sin u - u 1{u <= 1}) u^(-1-α) du`.
pub fn k_const(alpha: f64) -> f64 {
    let x = 1.0 - alpha;
    let c0 = 1.0 - EULER_MASCHERONI;
    if x.abs() < NEAR_ONE {
        let c1 = 0.5 - PI * PI / 24.0 + 0.5 * c0 * c0;
        return c0 + c1 * x;
    }
    let l = ln_gamma(2.0 - alpha) + (FRAC_PI_2 * x).cos().ln() - alpha.ln();
    l.exp_m1() / x
}

/// `C_α = ∫_0^∞ min(z^2, 1) z^(-1-α) dz = 1/(2-α) + 1/α`.
pub fn levy_integral_constant(alpha: f64) -> f64 {
    1.0 / (2.0 - alpha) + 1.0 / alpha
}

/// `∫_0^∞ (e^{izt} - 1 - izt 1{t <= 1}) t^(-1-α) dt`.
pub fn jtilde(z: f64, alpha: f64) -> Complex64 {
    if z == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = z.abs();
    let pow = a.powf(alpha);
    let re = -kappa(alpha) * pow;
    let x = 1.0 - alpha;
    // (a - a^α) / (1 - α)
    let drift = -a * one_minus_pow_over(a, -x);
    let im = z.signum() * (k_const(alpha) * pow - drift);
    Complex64::new(re, im)
}

/// `∫_0^∞ (c(gt) - g t 1{t <= 1}) t^(-1-α) dt` with `c` the clip to `[-1, 1]`.
pub fn drift_integral(g: f64, alpha: f64) -> f64 {
    if g == 0.0 {
        return 0.0;
    }
    let a = g.abs();
    let x = 1.0 - alpha;
    // (a^α - a) / (1 - α)
    let diff = a * one_minus_pow_over(a, -x);
    g.signum() * (a.powf(alpha) / alpha + diff)
}

/// `∫_eps^∞ c(t z) t^(-1-α) dt`, odd in `z`.
pub fn clipped_tail(z: f64, eps: f64, alpha: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let a = z.abs();
    let value = if a * eps >= 1.0 {
        eps.powf(-alpha) / alpha
    } else {
        // ∫_eps^{1/a} a t^(-α) dt = a (a^(α-1) - eps^(1-α)) / (1 - α)
        let x = 1.0 - alpha;
        let near = if x == 0.0 {
            -(a * eps).ln()
        } else {
            ((-x * a.ln()).exp_m1() - (x * eps.ln()).exp_m1()) / x
        };
        a * near + a.powf(alpha) / alpha
    };
    z.signum() * value
}

/// `∫_0^eps (e^{itz} - 1 - itz) t^(-1-α) dt`, the part of the fiber integral
/// that a cut at `eps` leaves out.
pub fn small_fiber_integral(z: f64, eps: f64, alpha: f64) -> Complex64 {
    let y = z * eps;
    if y == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if y.abs() > 8.0 {
        // full integral minus the non-oscillatory part of the complement
        let full = jtilde(z, alpha);
        let x = 1.0 - alpha;
        // i z ∫_eps^1 t^(-α) dt
        let near = z * if x == 0.0 { -eps.ln() } else { -(x * eps.ln()).exp_m1() / x };
        // ∫_eps^∞ e^{itz} t^(-1-α) dt = eps^-α E_{1+α}(-i y)
        let far = expint(1.0 + alpha, Complex64::new(0.0, -y)) * eps.powf(-alpha);
        return full - far + Complex64::new(eps.powf(-alpha) / alpha, near);
    }
    // sum_{k >= 2} (i y)^k / (k! (k - α)), scaled by eps^-α
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(0.0, y); // (i y)^k / k! at k = 1
    for k in 2..=80 {
        term *= Complex64::new(0.0, y / k as f64);
        let add = term / (k as f64 - alpha);
        sum += add;
        if add.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum * eps.powf(-alpha)
}

/// `E_p(x) = ∫_1^∞ e^(-x s) s^(-p) ds` by its continued fraction (modified
/// Lentz), accurate for `|x| >= 1` off the negative real axis.
fn expint(p: f64, x: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = x + p;
    let mut c = Complex64::new(1.0 / 1e-300, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (p - 1.0 + i as f64);
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        d = d.inv();
        c = b + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}
