//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let f: &dyn Fn(f64) -> f64 = &f;
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        let budget = tol * ((hi - lo).abs() / width).max(1e-3);
        // past the roundoff floor of the rule, bisection cannot improve `v`
        if err <= budget || err <= 64.0 * f64::EPSILON * v.abs() || depth >= 50 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// `∫_lo^hi f(t) dt` through `t = e^y`, for integrands with power-law ends.
pub fn integrate_log(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    integrate(|y| {
        let t = y.exp();
        f(t) * t
    }, lo.ln(), hi.ln(), tol)
}

/// `∫_0^1 g(t) dt` for `g(t) ~ C t^(γ-1)`, `γ > 0`: the log-variable integrand
/// decays like `e^(γ y)`.
pub fn integrate_from_zero(g: impl Fn(f64) -> f64, gamma_exp: f64, tol: f64) -> f64 {
    let lower = (-40.0 / gamma_exp).max(-700.0);
    integrate(|y| {
        let t = y.exp();
        g(t) * t
    }, lower, 0.0, tol)
}

/// `(1 - cos x) / x^2` without cancellation.
pub fn versine_ratio(x: f64) -> f64 {
    let h = 0.5 * x;
    let sinc = if h == 0.0 { 1.0 } else { h.sin() / h };
    0.5 * sinc * sinc
}

/// `(sin x - x) / x^3` without cancellation.
pub fn sine_defect_ratio(x: f64) -> f64 {
    if x.abs() > 0.1 {
        return (x.sin() - x) / (x * x * x);
    }
    let (x2, mut term, mut sum) = (x * x, -1.0 / 6.0, 0.0);
    for k in 1..12 {
        sum += term;
        term *= -x2 / ((2 * k + 2) * (2 * k + 3)) as f64;
    }
    sum
}

/// `∫_0^∞ (1 - cos u) u^(-1-α) du` by quadrature plus an asymptotic tail.
pub fn kappa_oracle(alpha: f64) -> f64 {
    let head = integrate_from_zero(|u| versine_ratio(u) * u.powf(1.0 - alpha), 2.0 - alpha, 1e-14);
    let periods = 400usize;
    let mut body = integrate(|u| (1.0 - u.cos()) * u.powf(-1.0 - alpha), 1.0, 2.0 * PI, 1e-14);
    for j in 1..periods {
        let (a, b) = (2.0 * PI * j as f64, 2.0 * PI * (j + 1) as f64);
        body += integrate(|u| (1.0 - u.cos()) * u.powf(-1.0 - alpha), a, b, 1e-15);
    }
    let big_a = 2.0 * PI * periods as f64;
    let beta = 1.0 + alpha;
    let cos_tail = beta * big_a.powf(-beta - 1.0)
        - beta * (beta + 1.0) * (beta + 2.0) * big_a.powf(-beta - 3.0);
    head + body + big_a.powf(-alpha) / alpha - cos_tail
}

/// `∫_0^∞ (sin u - u 1{u <= 1}) u^(-1-α) du` by quadrature plus an asymptotic tail.
pub fn k_oracle(alpha: f64) -> f64 {
    let head = integrate_from_zero(|u| sine_defect_ratio(u) * u.powf(2.0 - alpha), 3.0 - alpha, 1e-14);
    let periods = 400usize;
    let mut body = integrate(|u| u.sin() * u.powf(-1.0 - alpha), 1.0, 2.0 * PI, 1e-14);
    for j in 1..periods {
        let (a, b) = (2.0 * PI * j as f64, 2.0 * PI * (j + 1) as f64);
        body += integrate(|u| u.sin() * u.powf(-1.0 - alpha), a, b, 1e-15);
    }
    let big_a = 2.0 * PI * periods as f64;
    let beta = 1.0 + alpha;
    let tail = big_a.powf(-beta) - beta * (beta + 1.0) * big_a.powf(-beta - 2.0);
    head + body + tail
}

/// Exact `μ_p` mass of the cylinder with leading bits `bits`.
pub fn cylinder_mass(bits: &[u8], p: f64) -> f64 {
    bits.iter()
        .map(|&b| if b == 1 { p } else { 1.0 - p })
        .product()
}

/// `bits + m` on a little-endian bit array, carry dropped past the end.
pub fn add_bits(bits: &[u8], m: i64) -> Vec<u8> {
    let n = bits.len();
    let modulus = 1u128 << n;
    let value: u128 = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| (b as u128) << i)
        .sum();
    let shifted = ((value as i128 + m as i128).rem_euclid(modulus as i128)) as u128;
    (0..n).map(|i| ((shifted >> i) & 1) as u8).collect()
}

/// Asymptotic Kolmogorov survival function.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}
