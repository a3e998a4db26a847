use approx::assert_relative_eq;
use proptest::prelude::*;
use xjx_core::lsd::*;
use xjx_core::spectra::{radial_ecdf, RadialEcdf};
use xjx_core::Error;

const GAMMAS: [f64; 5] = [0.3, 0.5, 1.0, 2.0, 5.0];

fn model(gamma: f64) -> LsdModel {
    LsdModel::new(gamma).unwrap()
}

/// Five-point Gauss-Legendre on `[a, b]`.
fn gauss5(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    X.iter().zip(W).map(|(&x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|k| gauss5(&f, a + k as f64 * h, a + (k + 1) as f64 * h)).sum()
}

/// `int f(|z|) dA` over `lo <= |z| <= hi`, with nodes clustered at both ends.
fn polar_mass(m: &LsdModel, lo: f64, hi: f64) -> f64 {
    // r = lo + (hi - lo) * (3 s^2 - 2 s^3) flattens both endpoint singularities.
    let span = hi - lo;
    composite(
        |s| {
            let r = lo + span * s * s * (3.0 - 2.0 * s);
            let jac = span * 6.0 * s * (1.0 - s);
            if r <= 0.0 {
                return 0.0;
            }
            m.density(r).unwrap() * std::f64::consts::TAU * r * jac
        },
        0.0,
        1.0,
        4000,
    )
}

#[test]
fn model_constants_and_endpoints() {
    for &gamma in &GAMMAS {
        let m = model(gamma);
        let (lo, hi) = m.y_range();
        assert!((m.g(lo).unwrap() - m.r_inner().powi(2)).abs() <= 1e-12);
        assert!((m.g(hi).unwrap() - m.r_outer().powi(2)).abs() <= 1e-12 * hi.max(1.0) * 10.0);
        assert!((0.0..1.0).contains(&m.atom0()));
        assert_eq!(m.atom0() == 0.0, gamma <= 1.0);
    }
    assert!(LsdModel::new(0.0).is_err());
    assert!(LsdModel::new(f64::NAN).is_err());
}

#[test]
fn forward_map_values() {
    assert_relative_eq!(model(1.0).g(1.0).unwrap(), 2.0);
    assert_relative_eq!(model(2.0).g(1.0).unwrap(), 0.5);
    assert_eq!(model(0.5).g(0.0).unwrap(), 0.0);
    assert!(matches!(model(2.0).g(0.5), Err(Error::Domain { .. })));
    assert!(g_forward(3.0, &model(2.0)).is_err());
}

#[test]
fn inverse_values() {
    let one = model(1.0);
    assert_relative_eq!(one.g_inverse(2.0).unwrap(), 1.0, max_relative = 1e-12);
    assert!((g_inverse_gamma_one(2.0) - 1.0).abs() < 1e-10);
    assert_relative_eq!(g_inverse(6.0, &model(2.0)).unwrap(), 2.0);
    assert_eq!(model(0.5).g_inverse(0.0).unwrap(), 0.0);
    assert!(model(0.5).g_inverse(1.0).is_err());
    assert!(model(2.0).g_inverse(0.1).is_err());
}

/// Independent inversion by plain bisection on the forward map.
fn bisect(m: &LsdModel, t: f64) -> f64 {
    let (mut lo, mut hi) = m.y_range();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m.g(mid).unwrap() < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn inverse_round_trip_and_monotonicity() {
    for &gamma in &GAMMAS {
        let m = model(gamma);
        let (lo, hi) = m.t_range();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let t = lo + (hi - lo) * k as f64 / 999.0;
            let y = m.g_inverse(t).unwrap();
            assert!((m.g(y).unwrap() - t).abs() <= 1e-12 * t.max(1.0), "gamma {gamma}, t {t}");
            assert!(y >= prev);
            prev = y;
            if k % 50 == 0 {
                assert!((y - bisect(&m, t)).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn unit_ratio_closed_form_agrees() {
    let m = model(1.0);
    for k in 0..=400 {
        let t = 2.0 * k as f64 / 400.0;
        assert!((m.g_inverse(t).unwrap() - g_inverse_gamma_one(t)).abs() <= 1e-10, "t = {t}");
    }
}

#[test]
fn cdf_values() {
    assert_relative_eq!(lsd_cdf(0.3, &model(2.0)), 0.5);
    assert_relative_eq!(lsd_cdf(2f64.sqrt(), &model(1.0)), 1.0);
    assert_eq!(lsd_cdf(0.0, &model(0.5)), 0.0);
    for &gamma in &GAMMAS {
        let m = model(gamma);
        assert_eq!(m.cdf(0.0), m.atom0());
        assert_relative_eq!(m.cdf(m.r_outer()), 1.0, max_relative = 1e-12);
        let mut prev = 0.0;
        for k in 0..10_000 {
            let r = 1.1 * m.r_outer() * k as f64 / 9999.0;
            let f = m.cdf(r);
            assert!(f >= prev && (0.0..=1.0).contains(&f));
            prev = f;
        }
    }
}

#[test]
fn density_support_and_errors() {
    assert_eq!(lsd_density(2.0, &model(0.5)).unwrap(), 0.0);
    assert_eq!(lsd_density(0.3, &model(2.0)).unwrap(), 0.0);
    assert!(lsd_density(0.0, &model(0.5)).is_err());
    assert!(matches!(model(1.0).density(1e-8), Err(Error::UnboundedDensity { .. })));
    assert!(model(1.0).density(1e-3).unwrap() > 0.0);
}

#[test]
fn density_integrates_to_continuous_mass() {
    for &gamma in &[0.3, 0.5, 2.0, 5.0] {
        let m = model(gamma);
        let mass = polar_mass(&m, m.r_inner(), m.r_outer());
        assert!((mass - (1.0 - m.atom0())).abs() <= 1e-6, "gamma {gamma}: {mass}");
    }
    // At gamma = 1 the density diverges at the origin; integrate from the floor and
    // compare with the closed form for the mass below it.
    let m = model(1.0);
    let floor = DENSITY_FLOOR;
    let mass = polar_mass(&m, floor, m.r_outer());
    let below = g_inverse_gamma_one(floor * floor);
    assert!((mass - (1.0 - below)).abs() <= 1e-6, "{mass} vs {}", 1.0 - below);
}

#[test]
fn density_is_derivative_of_cdf() {
    for &gamma in &GAMMAS {
        let m = model(gamma);
        for k in 1..20 {
            let r = m.r_inner() + (m.r_outer() - m.r_inner()) * k as f64 / 20.0;
            let h = 1e-6;
            let numeric = (m.cdf(r + h) - m.cdf(r - h)) / (2.0 * h);
            let analytic = m.density(r).unwrap() * std::f64::consts::TAU * r;
            assert_relative_eq!(numeric, analytic, max_relative = 1e-5);
        }
    }
}

#[test]
fn quantile_values() {
    assert_eq!(lsd_quantile(0.25, &model(2.0)), 0.0);
    assert_relative_eq!(lsd_quantile(1.0, &model(1.0)), 2f64.sqrt());
    let q = lsd_quantile(0.5, &model(1.0));
    // g(1/2) = (1/2)(2 * 1/2)^2 / (3/2) = 1/3 at unit ratio.
    assert_relative_eq!(q, (1.0f64 / 3.0).sqrt(), max_relative = 1e-14);
    assert_relative_eq!(model(1.0).cdf(q), 0.5, max_relative = 1e-12);
}

#[test]
fn sampler_matches_law() {
    let m = model(2.0);
    let s = sample_lsd(&m, 100_000, 17).unwrap();
    let zeros = s.points.iter().filter(|p| p.norm() == 0.0).count() as f64 / 1e5;
    assert!((zeros - 0.5).abs() <= 0.01, "{zeros}");
    let e = radial_ecdf(&s).unwrap();
    assert!(e.sup_distance(|r| m.cdf(r)) <= 0.01);
    let nonzero: Vec<_> = s.points.iter().filter(|p| p.norm() > 0.0).collect();
    let mean_phase = nonzero.iter().map(|p| *p / p.norm()).sum::<xjx_core::c64>() / nonzero.len() as f64;
    assert!(mean_phase.norm() <= 0.02);

    let m = model(0.5);
    let s = m.sample(100_000, 3).unwrap();
    assert!(radial_ecdf(&s).unwrap().sup_distance(|r| m.cdf(r)) <= 0.01);
    assert_eq!(s, m.sample(100_000, 3).unwrap());
    assert!(m.sample(0, 3).is_err());
}

#[test]
fn stratified_reference_is_a_fine_quantization() {
    for &gamma in &GAMMAS {
        let m = model(gamma);
        let s = m.stratified(500).unwrap();
        let e = RadialEcdf::from_radii(s.radii());
        assert!(e.sup_distance(|r| m.cdf(r)) <= 1.0 / 500.0 + 1e-9);
    }
}

/// Trapezoid quadrature of the continuous density on `[lo, x]` in the angle variable.
fn mp_cdf_oracle(mp: &MpModel, x: f64) -> f64 {
    let (lo, hi) = mp.support();
    if x <= lo {
        return mp.atom();
    }
    let x = x.min(hi);
    // x = a - b cos(phi) removes the square-root endpoints.
    let c = mp.ratio();
    let (a, b) = (1.0 + c, 2.0 * c.sqrt());
    let phi_max = ((a - x) / b).clamp(-1.0, 1.0).acos();
    mp.atom()
        + composite(
            |phi| {
                let y = a - b * phi.cos();
                if y <= 0.0 { 0.0 } else { mp.density(y) * b * phi.sin() }
            },
            0.0,
            phi_max,
            2000,
        )
}

#[test]
fn marchenko_pastur_basics() {
    let unit = MpModel::new(1.0).unwrap();
    assert_eq!(unit.support(), (0.0, 4.0));
    for &x in &[0.5f64, 1.0, 3.0] {
        let expect = (x * (4.0 - x)).sqrt() / (2.0 * std::f64::consts::PI * x);
        assert_relative_eq!(unit.density(x), expect, max_relative = 1e-14);
    }
    for &ratio in &[0.3, 1.0, 2.0, 4.0, 10.0] {
        let mp = MpModel::new(ratio).unwrap();
        let (lo, hi) = mp.support();
        for k in 0..=50 {
            let x = lo + (hi - lo) * k as f64 / 50.0;
            assert!((mp.cdf(x) - mp_cdf_oracle(&mp, x)).abs() <= 1e-9, "ratio {ratio}, x {x}");
        }
        assert_relative_eq!(mp.cdf(hi), 1.0);
        for k in 1..100 {
            let u = k as f64 / 100.0;
            let q = mp.quantile(u);
            assert!(mp.cdf(q) >= u - 1e-12);
            if u > mp.atom() {
                assert!((mp.cdf(q) - u).abs() <= 1e-10);
            }
        }
    }
    assert_eq!(MpModel::for_gamma(0.5).unwrap().ratio(), 1.0);
    assert!(MpModel::new(-1.0).is_err());
}

#[test]
fn marchenko_pastur_sampling() {
    let mp = MpModel::new(1.0).unwrap();
    let s = mp_sample(&mp, 100_000, 5).unwrap();
    let mean = s.reals().iter().sum::<f64>() / 1e5;
    assert!((mean - 1.0).abs() <= 0.02);
    let mp4 = MpModel::new(4.0).unwrap();
    let s = mp4.sample(100_000, 6).unwrap();
    let zeros = s.reals().iter().filter(|&&x| x == 0.0).count() as f64 / 1e5;
    assert!((zeros - 0.75).abs() <= 0.01);
    let strat = mp4.stratified(400).unwrap().reals();
    assert!(strat.windows(2).all(|w| w[0] <= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_is_generalized_inverse(gamma in 0.1f64..6.0, u in 0.0f64..=1.0) {
        let m = model(gamma);
        let q = m.quantile(u);
        prop_assert!(m.cdf(q) >= u - 1e-12);
        if u > m.atom0() + 1e-12 {
            prop_assert!((m.cdf(q) - u).abs() <= 1e-10);
        }
    }

    #[test]
    fn inverse_stays_in_range(gamma in 0.1f64..6.0, s in 0.0f64..=1.0) {
        let m = model(gamma);
        let (lo, hi) = m.t_range();
        let y = m.g_inverse(lo + (hi - lo) * s).unwrap();
        let (ylo, yhi) = m.y_range();
        prop_assert!(y >= ylo && y <= yhi);
    }
}
