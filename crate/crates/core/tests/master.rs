use approx::assert_relative_eq;
use proptest::prelude::*;
use xjx_core::ensemble::{generate_x, xjx, EntryLaw, MatrixShape};
use xjx_core::lsd::{g_inverse_gamma_one, LsdModel};
use xjx_core::master::*;
use xjx_core::rng::{stream, Domain};
use xjx_core::spectra::resolvent_traces;
use xjx_core::{c64, Error};

fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Periodic trapezoid rule for the defining angular integrals of `I`, `J` and `u`.
fn quadrature(a: f64, u: c64, nodes: usize) -> (f64, c64) {
    let (mut i_sum, mut j_sum) = (0.0, c(0.0, 0.0));
    for k in 0..nodes {
        let e = c64::cis(std::f64::consts::TAU * k as f64 / nodes as f64);
        let den = a * a + (c(1.0, 0.0) + u * e).norm_sqr();
        i_sum += 1.0 / den;
        j_sum += e / den;
    }
    (i_sum / nodes as f64, j_sum / nodes as f64)
}

fn u_quadrature(h: f64, d: c64, nodes: usize) -> c64 {
    let mut acc = c(0.0, 0.0);
    for k in 0..nodes {
        let e = c64::cis(std::f64::consts::TAU * k as f64 / nodes as f64);
        acc += (c(h * h + d.norm_sqr(), 0.0) + d * e) / (h * h + (c(1.0, 0.0) + d * e).norm_sqr());
    }
    acc / nodes as f64
}

#[test]
fn integral_values() {
    assert_relative_eq!(integral_i(1.0, c(0.0, 0.0)).unwrap(), 0.5);
    assert_eq!(integral_j(1.0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    let (i_q, _) = quadrature(0.7, c(0.3, 0.2), 4096);
    assert!((integral_i(0.7, c(0.3, 0.2)).unwrap() - i_q).abs() <= 1e-8);
    let (_, j_q) = quadrature(0.5, c(0.4, 0.0), 4096);
    assert!((integral_j(0.5, c(0.4, 0.0)).unwrap() - j_q).norm() <= 1e-8);
    assert!(integral_i(0.0, c(1.0, 0.0)).is_err());
    assert!(integral_j(0.0, c(0.0, 1.0)).is_err());
}

#[test]
fn first_integral_depends_on_modulus_only() {
    let base = integral_i(0.4, c(0.9, 0.0)).unwrap();
    let mut rng = stream(1, Domain::Experiment, 0);
    for _ in 0..8 {
        let phi: f64 = rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU;
        assert_relative_eq!(integral_i(0.4, c64::from_polar(0.9, phi)).unwrap(), base, max_relative = 1e-14);
    }
}

#[test]
fn second_integral_conjugation() {
    // Conjugating u mirrors theta, which conjugates the integrand.
    for &u in &[c(0.3, 0.7), c(-1.2, 0.4), c(2.0, -3.0)] {
        let a = 0.6;
        let j = integral_j(a, u).unwrap();
        let j_bar = integral_j(a, u.conj()).unwrap();
        assert!((j_bar - j.conj()).norm() <= 1e-14);
        let (_, q) = quadrature(a, u, 4096);
        assert!((j - q).norm() <= 1e-8);
    }
}

#[test]
fn closed_forms_match_quadrature_on_a_grid() {
    let mut rng = stream(2, Domain::Experiment, 0);
    for _ in 0..20 {
        let h = 0.05 + 2.0 * rand::Rng::random::<f64>(&mut rng);
        for _ in 0..20 {
            let d = c(
                4.0 * rand::Rng::random::<f64>(&mut rng) - 2.0,
                4.0 * rand::Rng::random::<f64>(&mut rng) - 2.0,
            );
            let (u, v) = uv_rhs(h, d).unwrap();
            let (i_q, j_q) = quadrature(h, d, 4096);
            assert!((integral_i(h, d).unwrap() - i_q).abs() <= 1e-8);
            assert!((integral_j(h, d).unwrap() - j_q).norm() <= 1e-8);
            assert!((u - u_quadrature(h, d, 4096)).norm() <= 1e-8, "h {h}, d {d}");
            assert!((v - j_q.conj() * h).norm() <= 1e-8);
        }
    }
}

#[test]
fn uv_values_and_bounds() {
    let (u, v) = uv_rhs(1.0, c(0.0, 0.0)).unwrap();
    assert_relative_eq!(u.re, 0.5);
    assert_eq!((u.im, v), (0.0, c(0.0, 0.0)));
    let (u, _) = uv_rhs(0.8, c(0.3, -0.1)).unwrap();
    assert!((u - u_quadrature(0.8, c(0.3, -0.1), 4096)).norm() <= 1e-8);
    for a in 0..40 {
        for m in 0..40 {
            let h = 0.01 + 0.2 * a as f64;
            let d = c64::from_polar(2.0 + 0.25 * m as f64, 0.37 * m as f64);
            assert!(uv_rhs(h, d).unwrap().0.norm() <= 5.0);
        }
    }
    assert!(uv_rhs(0.0, c(1.0, 0.0)).is_err());
}

#[test]
fn large_t_solution_is_near_asymptote() {
    let opts = SolverOptions::default();
    for &z in &[c(0.0, 0.0), c(1.0, 0.0), c(-2.0, 2.0), c(0.0, 3.0)] {
        let s = solve_master(z, 100.0, 1.0, &opts).unwrap();
        assert!((0.99..=1.01).contains(&(s.t * s.h)));
        // h = gamma/t - gamma (gamma + |z|^2) / t^3 + O(t^-5)
        let expansion = 1.0 / 100.0 - (1.0 + z.norm_sqr()) / 1e6;
        assert!((s.h - expansion).abs() <= 3.0 * (1.0 + z.norm_sqr()).powi(2) / 1e10, "z {z}: h {} vs {expansion}", s.h);
        assert!(s.max_residual() <= 1e-10);
    }
}

#[test]
fn solutions_satisfy_their_contract() {
    let opts = SolverOptions::default();
    for &gamma in &[0.5, 1.0, 2.0] {
        for &z in &[c(0.0, 0.0), c(0.3, 0.1), c(1.0, 0.0), c(0.8, -1.1), c(3.0, 0.0)] {
            let path = [10.0, 1.0, 0.1, 0.01];
            for s in solve_master_path(z, &path, gamma, &opts).unwrap() {
                assert!(s.h > 0.0);
                assert!(s.d.norm() <= gamma / s.t + 1e-10);
                assert!(s.max_residual() <= 1e-10, "gamma {gamma}, z {z}, t {}", s.t);
                let (ru, rv) = residuals(z, s.t, gamma, s.h, s.d).unwrap();
                assert!(ru.max(rv) <= 1e-10);
                if s.t >= 10.0 {
                    assert!(s.h < 2.0 * gamma / s.t);
                }
            }
        }
    }
}

#[test]
fn bulk_value_at_unit_ratio() {
    let s = solve_master(c(1.0, 0.0), 1e-2, 1.0, &SolverOptions::default()).unwrap();
    let target = g_inverse_gamma_one(1.0);
    assert!((-s.d.re - target).abs() <= 0.02, "{} vs {target}", -s.d.re);
    assert!(s.d.im.abs() < 1e-12);
}

#[test]
fn rotation_covariance() {
    let opts = SolverOptions::default();
    let z = c(0.9, 0.2);
    let base = solve_master(z, 0.05, 1.5, &opts).unwrap();
    for k in 0..8 {
        let w = c64::cis(0.7 * k as f64 + 0.1);
        let rotated = solve_master(z * w, 0.05, 1.5, &opts).unwrap();
        assert!((rotated.h - base.h).abs() <= 1e-10);
        assert!((rotated.d - base.d * w).norm() <= 1e-10);
    }
}

#[test]
fn h_over_t_stays_bounded_below() {
    let opts = SolverOptions::default();
    let grid: Vec<f64> = (0..40).map(|k| 10.0 * 0.8f64.powi(k)).collect();
    for &z in &[c(0.2, 0.0), c(1.0, 1.0), c(3.0, 0.0)] {
        let sols = solve_master_path(z, &grid, 1.0, &opts).unwrap();
        let floor = sols.iter().map(|s| s.h / s.t).fold(f64::INFINITY, f64::min);
        assert!(floor > 1e-3, "z {z}: {floor}");
    }
}

#[test]
fn limit_values() {
    let b = limit_b(c(2.0, 0.0), 1.0).unwrap();
    assert_eq!(b.regime, Regime::Outer);
    assert_relative_eq!(b.b.re, -0.5);
    let z = c(0.3, 0.4);
    let b = limit_b(z, 2.0).unwrap();
    assert_eq!(b.regime, Regime::InnerHole);
    assert!((b.b + 1.0 / z.conj()).norm() < 1e-15);
    let b = limit_b(c(1.0, 0.0), 1.0).unwrap();
    assert_eq!(b.regime, Regime::Bulk);
    assert!((b.b.re + g_inverse_gamma_one(1.0)).abs() <= 1e-10);
    assert_eq!(limit_b(c(0.0, 0.0), 1.0), Err(Error::UndefinedAtOrigin));
}

#[test]
fn limit_boundaries_belong_to_the_bulk() {
    let gamma = 2.0;
    let inner = ((gamma - 1.0f64).powi(3) / gamma).sqrt();
    let outer = (gamma * (gamma + 1.0f64)).sqrt();
    assert_eq!(limit_b(c(inner, 0.0), gamma).unwrap().regime, Regime::Bulk);
    assert_eq!(limit_b(c(outer, 0.0), gamma).unwrap().regime, Regime::Bulk);
    assert_eq!(limit_b(c(inner * 0.999, 0.0), gamma).unwrap().regime, Regime::InnerHole);
    assert_eq!(limit_b(c(outer * 1.001, 0.0), gamma).unwrap().regime, Regime::Outer);
    // b is continuous across both boundaries.
    for r in [inner, outer] {
        let lo = limit_b(c(r * (1.0 - 1e-9), 0.0), gamma).unwrap().b;
        let hi = limit_b(c(r * (1.0 + 1e-9), 0.0), gamma).unwrap().b;
        assert!((lo - hi).norm() < 1e-6);
    }
}

#[test]
fn small_t_solution_approaches_limit_in_each_regime() {
    let opts = SolverOptions::default();
    for (z, gamma) in [(c(0.3, 0.2), 2.0), (c(1.0, 0.5), 2.0), (c(2.0, 2.0), 2.0), (c(0.7, 0.0), 1.0), (c(0.2, 0.3), 0.5)] {
        let s = solve_master(z, 1e-2, gamma, &opts).unwrap();
        let b = limit_b(z, gamma).unwrap();
        assert!((s.d - b.b).norm() <= 0.05, "z {z}, gamma {gamma}: {} vs {}", s.d, b.b);
    }
}

#[test]
fn stieltjes_transform_properties() {
    for &t in &[0.05, 1.0, 1e3] {
        let p = stieltjes_limit(c(0.4, -0.6), t, 1.5).unwrap();
        assert_eq!(p.re, 0.0);
        assert!(p.im > 0.0);
    }
    let p = stieltjes_limit(c(0.4, -0.6), 1e3, 1.5).unwrap();
    assert!((p.im * 1e3 - 1.0).abs() < 1e-3);
}

#[test]
fn finite_size_resolvent_is_close_to_the_limit() {
    let shape = MatrixShape::new(200, 400).unwrap();
    let x = generate_x(shape, &EntryLaw::gaussian(400).unwrap(), 8).unwrap();
    let y = xjx(&x);
    let (z, t, gamma) = (c(0.4, 0.2), 0.5, 0.5);
    let r = resolvent_traces(&y, 400, z, t).unwrap();
    let s = solve_master(z, t, gamma, &SolverOptions::default()).unwrap();
    assert!((r.half_trace() - c(0.0, s.h / gamma)).norm() <= 0.05);
    assert!((r.off_trace() - s.d / gamma).norm() <= 0.05);
}

#[test]
fn solver_rejects_bad_inputs_and_reports_failure() {
    let opts = SolverOptions::default();
    assert!(solve_master(c(1.0, 0.0), 0.0, 1.0, &opts).is_err());
    assert!(solve_master(c(1.0, 0.0), 1.0, -1.0, &opts).is_err());
    let bad = SolverOptions { continuation_ratio: 1.5, ..opts };
    assert!(solve_master(c(1.0, 0.0), 1.0, 1.0, &bad).is_err());
    let starved = SolverOptions { max_iter: 1, newton: false, ..opts };
    match solve_master(c(1.0, 0.0), 1e-3, 1.0, &starved) {
        Err(Error::NoConvergence { trajectory, .. }) => assert!(!trajectory.is_empty()),
        other => panic!("expected no-convergence, got {other:?}"),
    }
}

#[test]
fn inner_hole_limit_matches_atom_mass() {
    // -conj(z) b = gamma - 1 in the hole, independent of |z|.
    let model = LsdModel::new(3.0).unwrap();
    for &r in &[0.1, 0.5, 1.0] {
        let z = c64::from_polar(r, 1.0);
        assert!(r < model.r_inner());
        let b = limit_b(z, 3.0).unwrap();
        assert!((-z.conj() * b.b - c(2.0, 0.0)).norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn limit_times_conjugate_is_real(re in -4.0f64..4.0, im in -4.0f64..4.0, gamma in 0.2f64..4.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let b = limit_b(c(re, im), gamma).unwrap();
        let p = b.b * c(re, -im);
        prop_assert!(p.im.abs() <= 1e-12 * p.norm().max(1.0));
        prop_assert!(p.re <= 0.0);
    }

    #[test]
    fn residuals_stay_below_tolerance(re in -3.0f64..3.0, im in -3.0f64..3.0, log_t in -2.0f64..2.0, gamma in 0.3f64..3.0) {
        let s = solve_master(c(re, im), 10f64.powf(log_t), gamma, &SolverOptions::default()).unwrap();
        prop_assert!(s.max_residual() <= 1e-10);
        prop_assert!(s.h > 0.0);
    }
}
