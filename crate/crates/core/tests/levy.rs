mod common;

use common::{
    integrate, integrate_from_zero, integrate_log, k_oracle, kappa_oracle, kolmogorov_sf, sine_defect_ratio, versine_ratio,
};
use maharam::base::{BaseSystem, Marginal};
use maharam::integrals::{clipped_tail, drift_integral, jtilde, k_const, kappa, levy_integral_constant, small_fiber_integral};
use maharam::levy::{
    atom_dilation, fiber_scaling_identity, levy_integrability, randomize_semistable, sample_discrete_exponent,
    sample_unit_cell, scaling_check, semistable_beta, semistable_orbit, sym_orbit, theta_orbit, theta_orbit_at,
    Functional, Observable, SignCocycle, StableConfig, Window,
};
use maharam::maharam::{discrete_maharam_apply, maharam_apply, pareto_sample, span, Fiber, MaharamPoint};
use maharam::rng::stream;
use maharam::Error;
use num_complex::Complex64;
use rand::RngCore;
use std::f64::consts::PI;

const P: f64 = 2.0 / 3.0;
const ALPHAS: [f64; 7] = [0.3, 0.8, 1.0 - 1e-6, 1.0, 1.0 + 1e-6, 1.5, 1.9];
const BIG: f64 = 1e8;

fn odometer_cfg(alpha: f64, f: Observable, xi: SignCocycle, symmetric: bool) -> StableConfig {
    StableConfig::new(alpha, BaseSystem::odometer(P).unwrap(), f, xi, symmetric, Window::new(-3, 3).unwrap()).unwrap()
}

/// `∫_1^∞ trig(z t) t^(-1-α) dt` for `z > 0`, by substitution `u = z t`,
/// whole periods of quadrature and an asymptotic remainder.
fn trig_tail(z: f64, alpha: f64, cosine: bool) -> f64 {
    let trig = |u: f64| if cosine { u.cos() } else { u.sin() };
    let h = |u: f64| trig(u) * u.powf(-1.0 - alpha);
    let first = (z / (2.0 * PI)).ceil().max(1.0);
    let mut body = integrate(h, z, 2.0 * PI * first, 1e-15);
    let periods = 400.0;
    let mut j = first;
    while j < first + periods {
        body += integrate(h, 2.0 * PI * j, 2.0 * PI * (j + 1.0), 1e-16);
        j += 1.0;
    }
    let a = 2.0 * PI * j;
    let beta = 1.0 + alpha;
    let rest = if cosine {
        beta * a.powf(-beta - 1.0) - beta * (beta + 1.0) * (beta + 2.0) * a.powf(-beta - 3.0)
    } else {
        a.powf(-beta) - beta * (beta + 1.0) * a.powf(-beta - 2.0)
    };
    z.powf(alpha) * (body + rest)
}

fn jtilde_oracle(z: f64, alpha: f64) -> Complex64 {
    let a = z.abs();
    let re = integrate_from_zero(|t| -a * a * versine_ratio(a * t) * t.powf(1.0 - alpha), 2.0 - alpha, 1e-15)
        + trig_tail(a, alpha, true)
        - 1.0 / alpha;
    let im = integrate_from_zero(|t| a * a * a * sine_defect_ratio(a * t) * t.powf(2.0 - alpha), 3.0 - alpha, 1e-15)
        + trig_tail(a, alpha, false);
    Complex64::new(re, z.signum() * im)
}

/// `∫_lo^∞ h(t) dt` where `h(t) = t^(-1-α)` beyond `BIG`.
fn power_tail_integral(h: impl Fn(f64) -> f64, lo: f64, kink: f64, alpha: f64) -> f64 {
    let kink = kink.clamp(lo, BIG);
    integrate_log(&h, lo, kink, 1e-14) + integrate_log(&h, kink, BIG, 1e-14) + BIG.powf(-alpha) / alpha
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn kappa_and_k_match_quadrature() {
    for alpha in ALPHAS {
        let (k, ko) = (kappa(alpha), kappa_oracle(alpha));
        assert!(close(k, ko, 1e-8), "κ at {alpha}: {k} vs {ko}");
        let (c, co) = (k_const(alpha), k_oracle(alpha));
        assert!(close(c, co, 1e-8), "K at {alpha}: {c} vs {co}");
    }
    assert!((kappa(1.0) - PI / 2.0).abs() < 1e-15);
}

#[test]
fn jtilde_matches_quadrature() {
    for alpha in ALPHAS {
        for z in [0.3, 1.0, 2.5, 7.0, -1.7] {
            let (v, o) = (jtilde(z, alpha), jtilde_oracle(z, alpha));
            assert!((v - o).norm() <= 1e-8 * o.norm().max(1.0), "z = {z}, α = {alpha}: {v} vs {o}");
        }
    }
    assert_eq!(jtilde(0.0, 1.3), Complex64::new(0.0, 0.0));
}

#[test]
fn drift_integral_matches_quadrature() {
    for alpha in ALPHAS {
        for g in [0.05, 0.7, 1.0, 3.0, 40.0, -2.0] {
            let a = f64::abs(g);
            let h = |t: f64| ((a * t).min(1.0) - if t <= 1.0 { a * t } else { 0.0 }) * t.powf(-1.0 - alpha);
            let lo = 1f64.min(1.0 / a);
            let oracle = g.signum() * power_tail_integral(h, lo, 1f64.max(1.0 / a), alpha);
            let v = drift_integral(g, alpha);
            assert!(close(v, oracle, 1e-8), "g = {g}, α = {alpha}: {v} vs {oracle}");
        }
    }
}

#[test]
fn clipped_tail_matches_quadrature() {
    for alpha in ALPHAS {
        for (z, eps) in [(0.5, 0.01), (3.0, 0.1), (20.0, 0.1), (-4.0, 1e-3)] {
            let a = f64::abs(z);
            let h = |t: f64| (a * t).min(1.0) * t.powf(-1.0 - alpha);
            let oracle = z.signum() * power_tail_integral(h, eps, 1.0 / a, alpha);
            let v = clipped_tail(z, eps, alpha);
            assert!(close(v, oracle, 1e-8 * oracle.abs().max(1.0)), "z = {z}, α = {alpha}: {v} vs {oracle}");
        }
    }
}

#[test]
fn small_fiber_integral_matches_quadrature() {
    for alpha in ALPHAS {
        for (z, eps) in [(1.0, 0.01), (50.0, 0.01), (3.0, 1.0), (7.9, 1.0), (8.5, 1.0), (-20.0, 1.0)] {
            let y = z * eps;
            let re = integrate_from_zero(|s| -y * y * versine_ratio(y * s) * s.powf(1.0 - alpha), 2.0 - alpha, 1e-15);
            let im = integrate_from_zero(|s| y * y * y * sine_defect_ratio(y * s) * s.powf(2.0 - alpha), 3.0 - alpha, 1e-15);
            let oracle = Complex64::new(re, im) * eps.powf(-alpha);
            let v = small_fiber_integral(z, eps, alpha);
            assert!(
                (v - oracle).norm() <= 1e-8 * oracle.norm().max(1.0),
                "z = {z}, eps = {eps}, α = {alpha}: {v} vs {oracle}"
            );
        }
    }
}

#[test]
fn levy_constant_matches_quadrature() {
    for alpha in [0.5, 1.0, 1.5] {
        let head = integrate_from_zero(|z| z.powf(1.0 - alpha), 2.0 - alpha, 1e-15);
        let oracle = head + power_tail_integral(|z| z.powf(-1.0 - alpha), 1.0, 1.0, alpha);
        assert!(close(levy_integral_constant(alpha), oracle, 1e-9), "α = {alpha}");
    }
}

/// `∫ min(t^2 f^2, 1) t^(-1-α) dt = |f|^α C_α` at fixed `f`.
#[test]
fn fiber_integrability_scales_with_the_observable() {
    let alpha = 1.3;
    for f in [0.2, 1.0, 4.0] {
        let head = integrate_from_zero(|t| (t * f).powi(2) * t.powf(-1.0 - alpha), 2.0 - alpha, 1e-15);
        let cut = 1.0 / f;
        let lower = head * cut.powf(2.0 - alpha);
        let upper = power_tail_integral(|t| t.powf(-1.0 - alpha), cut, cut, alpha);
        let oracle = lower + upper;
        assert!(close(f.powf(alpha) * levy_integral_constant(alpha), oracle, 1e-9));
    }
}

#[test]
fn integrability_of_a_constant_observable_is_exact() {
    for alpha in [0.5, 1.0, 1.5] {
        let cfg = odometer_cfg(alpha, Observable::One, SignCocycle::Plus, false);
        let e = levy_integrability(&cfg, 1, 10_000, 2).unwrap();
        assert_eq!(e.value, levy_integral_constant(alpha));
        assert_eq!(e.se, 0.0);
    }
}

#[test]
fn integrability_estimate_is_stable_under_doubling() {
    let cfg = odometer_cfg(1.2, Observable::DyadicSum, SignCocycle::Plus, false);
    let a = levy_integrability(&cfg, 7, 100_000, 2).unwrap();
    let b = levy_integrability(&cfg, 8, 200_000, 2).unwrap();
    let se = a.se.hypot(b.se);
    assert!((a.value - b.value).abs() < 3.0 * se, "{} vs {} (se {se})", a.value, b.value);
    assert!((b.se / a.se - 0.5f64.sqrt()).abs() < 0.05);
}

#[test]
fn vanishing_observable_is_refused() {
    let cfg = odometer_cfg(1.0, Observable::Constant { c: 0.0 }, SignCocycle::Plus, false);
    assert!(levy_integrability(&cfg, 1, 1000, 1).is_err());
}

#[test]
fn orbit_map_is_shift_equivariant() {
    let cfg = odometer_cfg(1.0, Observable::DyadicSum, SignCocycle::Plus, false);
    let mut rng = stream(41, 0);
    for _ in 0..1000 {
        let x = cfg.system.sample_point(&mut rng);
        let t = pareto_sample(0.1, 1.0, &mut rng).unwrap();
        let pt = MaharamPoint::multiplicative(x, t);
        let moved = maharam_apply(&cfg.system, cfg.alpha, &pt, 1).unwrap();
        let lhs = theta_orbit(&cfg, &moved).unwrap();
        let rhs = theta_orbit_at(&cfg, &pt, &[-2, -1, 0, 1, 2, 3, 4]).unwrap();
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }
}

#[test]
fn sign_cocycle_at_two_is_a_product_of_generators() {
    let cfg = StableConfig::new(
        1.4,
        BaseSystem::odometer(P).unwrap(),
        Observable::DyadicSum,
        SignCocycle::Bit1,
        true,
        Window::new(0, 2).unwrap(),
    )
    .unwrap();
    let mut rng = stream(42, 0);
    let mut flips = 0;
    for _ in 0..1000 {
        let x = cfg.system.sample_point(&mut rng);
        let pt = MaharamPoint::multiplicative(x.clone(), 1.3);
        let signed = sym_orbit(&cfg, &pt, 1.0).unwrap();
        let plain = theta_orbit(&cfg, &pt).unwrap();
        let a2 = cfg.xi.value(&cfg.system, &x).unwrap()
            * cfg.xi.value(&cfg.system, &cfg.system.apply(&x, 1).unwrap()).unwrap();
        assert_eq!(signed.value_at(2).unwrap(), a2 * plain.value_at(2).unwrap());
        assert_eq!(signed.value_at(0).unwrap(), plain.value_at(0).unwrap());
        flips += usize::from(a2 < 0.0);
    }
    assert!(flips > 100);
}

#[test]
fn fiber_scaling_identity_matches_quadrature() {
    for (a, b, c, alpha) in [(1.0, 2.0, 0.5, 0.8), (0.1, 7.0, 3.0, 1.5), (2.0, 2.5, std::f64::consts::E, 1.0)] {
        let (lhs, rhs) = fiber_scaling_identity(a, b, c, alpha);
        let q = |lo: f64, hi: f64| integrate_log(|s| s.powf(-1.0 - alpha), lo, hi, 1e-14);
        assert!(close(lhs, q(c * a, c * b), 1e-10));
        assert!(close(rhs, c.powf(-alpha) * q(a, b), 1e-10));
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }
}

#[test]
fn scaling_check_on_the_odometer() {
    let cfg = odometer_cfg(1.0, Observable::DyadicSum, SignCocycle::Plus, false);
    let f = Functional::Band { lo: 1.0, hi: 3.0 };
    let r = scaling_check(&cfg, 2.0, &f, 0.5, 1_000_000, 43, 4).unwrap();
    assert!(r.z < 4.0, "{r:?}");
    assert!(r.lhs > 0.0);
    let same = scaling_check(&cfg, 1.0, &f, 0.5, 10_000, 43, 4).unwrap();
    assert_eq!(same.lhs, same.rhs);
}

#[test]
fn scaling_check_refuses_biased_setups() {
    let cfg = odometer_cfg(1.0, Observable::DyadicSum, SignCocycle::Plus, false);
    let f = Functional::Band { lo: 1.0, hi: 3.0 };
    // c δ = 0.5 lies below the sampled fiber region
    assert!(matches!(scaling_check(&cfg, 0.5, &f, 0.75, 100, 1, 1), Err(Error::BiasedConfiguration(_))));
    let gauss = StableConfig::symmetric(
        1.0,
        BaseSystem::bernoulli(Marginal::StandardNormal).unwrap(),
        Observable::Coordinate,
        Window::new(0, 0).unwrap(),
    )
    .unwrap();
    assert!(matches!(scaling_check(&gauss, 2.0, &f, 0.01, 100, 1, 1), Err(Error::BiasedConfiguration(_))));
}

#[test]
fn semistable_span_and_atoms() {
    let b = span(0.5, 1.0).unwrap();
    assert_eq!(b, 2.0);
    assert!((semistable_beta(b, 1.0) - 0.5).abs() < 1e-15);
    let beta = integrate(|s| s.powf(-1.7), 1.0, span(0.5, 0.7).unwrap(), 1e-14);
    assert!(close(semistable_beta(span(0.5, 0.7).unwrap(), 0.7), beta, 1e-12));
    for k in [-5, 0, 3, 11] {
        let (lhs, rhs) = atom_dilation(b, k, 1.3);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }
}

#[test]
fn unit_cell_sampler_matches_its_cdf() {
    let (b, alpha) = (span(0.5, 1.2).unwrap(), 1.2);
    let mut rng = stream(44, 0);
    let mut xs: Vec<f64> = (0..100_000).map(|_| sample_unit_cell(b, alpha, &mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let cdf = |u: f64| (1.0 - u.powf(-alpha)) / (1.0 - b.powf(-alpha));
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (cdf(x) - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf(x)).abs()))
        .fold(0.0, f64::max);
    assert!(kolmogorov_sf(n.sqrt() * d) > 0.01);
    assert!(xs[0] >= 1.0 && xs[xs.len() - 1] < b);
}

#[test]
fn discrete_exponent_sampler_matches_atom_masses() {
    let (b, alpha) = (2.0, 1.0);
    let mut rng = stream(45, 0);
    let n = 100_000;
    let draws: Vec<i64> = (0..n).map(|_| sample_discrete_exponent(b, alpha, 3, &mut rng).unwrap()).collect();
    assert!(draws.iter().all(|&k| k >= 3));
    for j in 0..4 {
        let p = 0.5f64.powi(j + 1);
        let freq = draws.iter().filter(|&&k| k == 3 + j as i64).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "j = {j}: {freq} vs {p}");
    }
}

#[test]
fn semistable_orbit_follows_the_discrete_extension() {
    let cfg = odometer_cfg(1.0, Observable::DyadicSum, SignCocycle::Plus, false);
    let b = span(0.5, cfg.alpha).unwrap();
    let mut rng = stream(46, 0);
    for _ in 0..500 {
        let x = cfg.system.sample_point(&mut rng);
        let k = (rng.next_u64() % 9) as i64 - 4;
        let pt = MaharamPoint::discrete(x.clone(), k);
        let (orbit, exps) = semistable_orbit(&cfg, 0.5, &pt).unwrap();
        for (j, &n) in orbit.indices.iter().enumerate() {
            let moved = discrete_maharam_apply(&cfg.system, 0.5, &pt, n).unwrap();
            let Fiber::Discrete(kn) = moved.fiber else { panic!() };
            assert_eq!(kn, exps[j]);
            let y = cfg.system.apply(&x, n).unwrap();
            let direct = b.powi(kn as i32) * cfg.f.eval(&cfg.system, &y).unwrap();
            assert!((orbit.values[j] - direct).abs() <= 1e-14 * direct.abs().max(1e-300));
        }
        let lifted = randomize_semistable(b, cfg.alpha, &pt, &mut rng).unwrap();
        let u = lifted.t().unwrap() / b.powi(k as i32);
        assert!((1.0 - 1e-12..b).contains(&u));
    }
    assert!(semistable_orbit(&cfg, 0.3, &MaharamPoint::discrete(cfg.system.sample_point(&mut rng), 0)).is_err());
}
