mod common;

use common::{cylinder_mass, integrate, integrate_log, kolmogorov_sf};
use maharam::base::{BasePoint, BaseSystem, DyadicPoint, Marginal};
use maharam::maharam::{
    additive_to_multiplicative, atom_mass, discrete_maharam_apply, fiber_mass, maharam_apply,
    multiplicative_to_additive, pareto_interval_mass, pareto_sample, scaling_flow, span, Fiber,
    FiberLaw, FiberRepr, MaharamPoint,
};
use maharam::mc::Moments;
use maharam::rng::stream;
use maharam::verify::quasi_invariance_suite;
use proptest::prelude::*;
use rand::RngCore;

const P: f64 = 2.0 / 3.0;

#[test]
fn odometer_fiber_moves_by_the_derivative() {
    // φ(1,1,0,...) = 1, λ = 1/2
    let sys = BaseSystem::odometer(P).unwrap();
    let x = DyadicPoint::from_bits(&[1, 1, 0], P, 2).unwrap();
    let pt = MaharamPoint::multiplicative(BasePoint::Dyadic(x), 4.0);
    let y = maharam_apply(&sys, 1.0, &pt, 1).unwrap();
    assert!((y.t().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(maharam_apply(&sys, 1.0, &pt, 0).unwrap(), pt);
}

#[test]
fn discrete_extension_example() {
    // φ(0,...) = -1, so w_1 = λ^-1 and the exponent moves from 0 to 1
    let sys = BaseSystem::odometer(P).unwrap();
    let x = DyadicPoint::from_bits(&[0], P, 2).unwrap();
    let pt = MaharamPoint::discrete(BasePoint::Dyadic(x), 0);
    let y = discrete_maharam_apply(&sys, 0.5, &pt, 1).unwrap();
    assert_eq!(y.fiber, Fiber::Discrete(1));
    assert_eq!(span(0.5, 1.0).unwrap(), 2.0);
    assert_eq!(discrete_maharam_apply(&sys, 0.5, &pt, 0).unwrap(), pt);
    let translation = BaseSystem::translation(0.3).unwrap();
    let tp = MaharamPoint::discrete(BasePoint::Site(0), 0);
    assert!(discrete_maharam_apply(&translation, 0.5, &tp, 1).is_err());
}

#[test]
fn discrete_and_continuous_extensions_agree() {
    let sys = BaseSystem::odometer(P).unwrap();
    let alpha = 1.3;
    let b = span(0.5, alpha).unwrap();
    let mut rng = stream(11, 0);
    for _ in 0..1000 {
        let x = sys.sample_point(&mut rng);
        let k = (rng.next_u64() % 21) as i64 - 10;
        let n = (rng.next_u64() % 129) as i64 - 64;
        let d = discrete_maharam_apply(&sys, 0.5, &MaharamPoint::discrete(x.clone(), k), n).unwrap();
        let c = maharam_apply(&sys, alpha, &MaharamPoint::multiplicative(x, b.powi(k as i32)), n).unwrap();
        let Fiber::Discrete(k2) = d.fiber else { panic!() };
        let t = c.t().unwrap();
        assert!((t - b.powi(k2 as i32)).abs() <= 1e-12 * t);
        assert_eq!(d.base, c.base);
    }
}

#[test]
fn scaling_flow_commutes_with_extension() {
    let sys = BaseSystem::odometer(P).unwrap();
    let mut rng = stream(12, 0);
    for i in 0..10_000 {
        let x = sys.sample_point(&mut rng);
        let t = pareto_sample(0.1, 1.4, &mut rng).unwrap();
        let c = 0.1 + (i % 37) as f64 * 0.3;
        let n = (i % 65) as i64 - 32;
        let pt = MaharamPoint::multiplicative(x, t);
        let a = scaling_flow(&maharam_apply(&sys, 1.4, &pt, n).unwrap(), c).unwrap();
        let b = maharam_apply(&sys, 1.4, &scaling_flow(&pt, c).unwrap(), n).unwrap();
        assert_eq!(a.base, b.base);
        let (ta, tb) = (a.t().unwrap(), b.t().unwrap());
        assert!((ta - tb).abs() <= 1e-12 * ta);
    }
}

#[test]
fn additive_measure_maps_to_pareto_measure() {
    let alpha = 1.5;
    // s-range whose image is [1, 2], endpoints found through the inverse map
    let (lo, hi) = (multiplicative_to_additive(2.0, alpha), multiplicative_to_additive(1.0, alpha));
    let lhs = integrate(
        |s| {
            let t = additive_to_multiplicative(s, alpha);
            if (1.0..=2.0).contains(&t) { s.exp() } else { 0.0 }
        },
        lo,
        hi,
        1e-13,
    );
    let rhs = alpha * integrate(|t| t.powf(-1.0 - alpha), 1.0, 2.0, 1e-13);
    assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    assert_eq!(additive_to_multiplicative(0.0, alpha), 1.0);
    assert!((additive_to_multiplicative(-alpha * 2f64.ln(), alpha) - 2.0).abs() < 1e-15);
}

#[test]
fn additive_shift_is_a_fiber_dilation() {
    let (alpha, s, u) = (0.7, 0.4, 1.9);
    let moved = additive_to_multiplicative(s - u, alpha);
    let dilated = additive_to_multiplicative(s, alpha) * (u / alpha).exp();
    assert!((moved - dilated).abs() < 1e-14 * moved);
}

#[test]
fn fiber_mass_matches_quadrature() {
    let tail = |eps: f64, alpha: f64| {
        let big: f64 = 1e6;
        integrate_log(|t| t.powf(-1.0 - alpha), eps, big, 1e-12) + big.powf(-alpha) / alpha
    };
    let m = fiber_mass(0.01, 1.5, false).unwrap();
    assert!((m - 1000.0 / 1.5).abs() < 1e-9);
    assert!((m - tail(0.01, 1.5)).abs() < 1e-6 * m);
    assert_eq!(fiber_mass(1.0, 1.0, false).unwrap(), 1.0);
    assert!((tail(1.0, 1.0) - 1.0).abs() < 1e-8);
    assert!((fiber_mass(0.01, 1.5, true).unwrap() - 2.0 * m).abs() < 1e-9);
    assert!(fiber_mass(-1.0, 1.0, true).is_err());
}

#[test]
fn pareto_sampler_matches_its_cdf() {
    let (eps, alpha) = (0.01, 1.5);
    let mut rng = stream(13, 0);
    let mut xs: Vec<f64> = (0..100_000).map(|_| pareto_sample(eps, alpha, &mut rng).unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (eps / x).powf(alpha);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let p = kolmogorov_sf(n.sqrt() * d);
    assert!(p > 0.01, "KS p = {p}");
    assert!(xs[0] > eps);
}

#[test]
fn rectangle_masses_scale_exactly() {
    let alpha = 0.9;
    for (bits, a, b) in [(vec![1u8, 0, 1], 0.5, 2.0), (vec![0u8], 1e-3, 4.0), (vec![1u8; 6], 3.0, 3.5)] {
        let base = cylinder_mass(&bits, P);
        for c in [0.5, 2.0, std::f64::consts::E, 11.0] {
            let dilated = base * pareto_interval_mass(c * a, c * b, alpha);
            let scaled = c.powf(-alpha) * base * pareto_interval_mass(a, b, alpha);
            assert!((dilated - scaled).abs() <= 1e-12 * scaled);
        }
    }
}

/// `G_b × [1, b) -> (0, ∞)`, `(g, u) -> g u` carries `m_b ⊗ s^(-1-α) ds` to
/// `s^(-1-α) ds`.
#[test]
fn discrete_times_unit_cell_is_continuous() {
    let alpha = 1.2;
    let b = span(0.5, alpha).unwrap();
    let law = FiberLaw::new(alpha, FiberRepr::Multiplicative).unwrap();
    for (lo, hi) in [(0.3, 0.9), (1.0, 5.0), (2.5, 40.0), (0.01, 0.011)] {
        let mut pushed = 0.0;
        for k in -40i64..40 {
            let g = b.powi(k as i32);
            let (u_lo, u_hi) = ((lo / g).max(1.0), (hi / g).min(b));
            if u_lo < u_hi {
                pushed += atom_mass(b, k, alpha) * integrate(|u| u.powf(-1.0 - alpha), u_lo, u_hi, 1e-14);
            }
        }
        let direct = law.interval_mass(lo, hi);
        assert!((pushed - direct).abs() < 1e-8 * direct.max(1.0), "[{lo}, {hi}): {pushed} vs {direct}");
    }
}

#[test]
fn extension_preserves_the_product_measure() {
    for sys in [
        BaseSystem::odometer(P).unwrap(),
        BaseSystem::translation(0.5).unwrap(),
        BaseSystem::bernoulli(Marginal::Uniform).unwrap(),
    ] {
        let r = quasi_invariance_suite(&sys, &[0.8, 1.5], 200_000, 21, 1).unwrap();
        assert!(r.pass(), "{r}");
    }
}

/// The same paired estimator with the fiber moved by `w` instead of `w^(1/α)`
/// must detect the wrong extension, so the invariance test has power.
#[test]
fn invariance_test_detects_a_wrong_fiber_exponent() {
    let sys = BaseSystem::odometer(P).unwrap();
    let alpha = 0.8;
    let (lo, hi) = (1.0, 2.0);
    let delta = lo * 2f64.powf(-1.0);
    let mut m = Moments::new(1);
    let mut rng = stream(31, 0);
    for _ in 0..200_000 {
        let x = sys.sample_point(&mut rng);
        let t = pareto_sample(delta, alpha, &mut rng).unwrap();
        let (_, w) = sys.apply_with_cocycle(&x, 1).unwrap();
        let wrong = t * w.value();
        let ind = |v: f64| f64::from(u8::from((lo..=hi).contains(&v)));
        m.push(&[ind(wrong) - ind(t)]);
    }
    let e = m.estimate(0);
    assert!(e.value.abs() > 8.0 * e.se, "z = {}", e.value / e.se);
}

proptest! {
    #[test]
    fn composition_is_additive(seed in any::<u64>(), n in -200i64..200, m in -200i64..200, t in 1e-3f64..1e3) {
        let sys = BaseSystem::odometer(0.75).unwrap();
        let mut rng = stream(seed, 0);
        let pt = MaharamPoint::multiplicative(sys.sample_point(&mut rng), t);
        let two = maharam_apply(&sys, 1.1, &maharam_apply(&sys, 1.1, &pt, n).unwrap(), m).unwrap();
        let one = maharam_apply(&sys, 1.1, &pt, n + m).unwrap();
        prop_assert_eq!(&two.base, &one.base);
        let (a, b) = (two.t().unwrap(), one.t().unwrap());
        prop_assert!((a.ln() - b.ln()).abs() < 1e-12);
    }

    #[test]
    fn flow_group_law(c in 1e-3f64..1e3, t in 1e-3f64..1e3) {
        let pt = MaharamPoint::multiplicative(BasePoint::Site(3), t);
        let back = scaling_flow(&scaling_flow(&pt, c).unwrap(), 1.0 / c).unwrap();
        prop_assert!((back.t().unwrap() - t).abs() <= 1e-14 * t);
    }
}
