//! The acceptance criteria as runnable checks.
//!
//! Every check reports what it measured against its tolerance and how long it
//! took. `force_fail` sets every tolerance to zero, which makes the
//! tolerance-based checks fail; it exists to exercise the failure path.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use xjx_core::ensemble::{generate_x, make_j, xjx, EntryLaw, MaModel, MatrixShape};
use xjx_core::lsd::{g_inverse_gamma_one, LsdModel};
use xjx_core::master::{integral_i, integral_j, limit_b, solve_master, SolverOptions};
use xjx_core::rng::{child_seed, stream, Domain};
use xjx_core::spectra::{
    eigenvalues, linearization_check, radial_ecdf_snapped, resolvent_traces, smin_experiment, spectral_norm,
    zero_eigen_count, SminOptions, SpectralSample,
};
use xjx_core::transport::{optimal_matching, wasserstein2, wasserstein2_oracle, PointCloud};
use xjx_core::whiteness::{calibrate_with, roc_many, trial_statistics, References, TestKind, TestSpec};
use xjx_core::c64;

use crate::config::Alternative;
use crate::error::Result;

pub const VERIFY_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub force_fail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub runtime_s: f64,
    pub budget_s: Option<f64>,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.runtime_s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionReport>,
    pub passed: bool,
}

struct Check {
    passed: bool,
    detail: String,
}

type CheckFn = fn(&Ctx) -> Result<Check>;

struct Ctx {
    scale: f64,
}

impl Ctx {
    /// A tolerance, or zero when failure is forced.
    fn tol(&self, t: f64) -> f64 {
        t * self.scale
    }
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget_s: Option<f64>,
    run: CheckFn,
}

const CRITERIA: [Criterion; 13] = [
    Criterion { id: 1, name: "radial-cdf-gamma-0.5", budget_s: Some(120.0), run: radial_cdf_half },
    Criterion { id: 2, name: "radial-cdf-gamma-2-with-atom", budget_s: Some(240.0), run: radial_cdf_two },
    Criterion { id: 3, name: "ring-support-gamma-2", budget_s: None, run: ring_support },
    Criterion { id: 4, name: "unit-ratio-closed-form", budget_s: Some(1.0), run: unit_ratio_closed_form },
    Criterion { id: 5, name: "master-vs-finite-resolvent", budget_s: Some(180.0), run: master_vs_resolvent },
    Criterion { id: 6, name: "small-t-limit", budget_s: Some(30.0), run: small_t_limit },
    Criterion { id: 7, name: "residue-formulas", budget_s: Some(5.0), run: residue_formulas },
    Criterion { id: 8, name: "wasserstein-oracle", budget_s: Some(10.0), run: wasserstein_oracle },
    Criterion { id: 9, name: "roc-ordering", budget_s: Some(900.0), run: roc_ordering },
    Criterion { id: 10, name: "calibrated-false-positive-rate", budget_s: None, run: calibration_honesty },
    Criterion { id: 11, name: "linearization-inequality", budget_s: None, run: linearization },
    Criterion { id: 12, name: "smallest-singular-value-trend", budget_s: None, run: smin_trend },
    Criterion { id: 13, name: "norm-convergence", budget_s: None, run: norm_convergence },
];

pub fn criterion_ids() -> Vec<(usize, &'static str)> {
    CRITERIA.iter().map(|c| (c.id, c.name)).collect()
}

/// Runs the selected criteria (all when `only` is empty), calling `on_done` after each.
pub fn run(opts: VerifyOptions, only: &[usize], mut on_done: impl FnMut(&CriterionReport)) -> VerifyReport {
    let ctx = Ctx {
        scale: if opts.force_fail { 0.0 } else { 1.0 },
    };
    let mut criteria = Vec::new();
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)(&ctx);
        let runtime_s = start.elapsed().as_secs_f64();
        let (mut passed, mut detail) = match outcome {
            Ok(check) => (check.passed, check.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(budget) = c.budget_s {
            if runtime_s > budget {
                passed = false;
                detail.push_str(&format!("; runtime {runtime_s:.1} s exceeds {budget} s"));
            }
        }
        let report = CriterionReport {
            id: c.id,
            name: c.name,
            passed,
            detail,
            runtime_s,
            budget_s: c.budget_s,
        };
        on_done(&report);
        criteria.push(report);
    }
    let passed = criteria.iter().all(|c| c.passed);
    VerifyReport { criteria, passed }
}

fn seed(criterion: u64, k: u64) -> u64 {
    child_seed(VERIFY_SEED, Domain::Experiment, criterion * 1000 + k)
}

fn ensemble_spectrum(rows: usize, cols: usize, seed: u64) -> Result<SpectralSample> {
    let shape = MatrixShape::new(rows, cols)?;
    let x = generate_x(shape, &EntryLaw::gaussian(cols)?, seed)?;
    Ok(eigenvalues(&xjx(&x))?)
}

const SEEDS: u64 = 10;

fn spectra(criterion: u64, rows: usize, cols: usize) -> Result<Vec<SpectralSample>> {
    (0..SEEDS).map(|k| ensemble_spectrum(rows, cols, seed(criterion, k))).collect()
}

fn radial_cdf_half(ctx: &Ctx) -> Result<Check> {
    let model = LsdModel::new(0.5)?;
    let tol = ctx.tol(0.06);
    let mut distances = Vec::new();
    for k in 0..SEEDS {
        let s = ensemble_spectrum(500, 1000, seed(1, k))?;
        distances.push(radial_ecdf_snapped(&s, 1e-8)?.sup_distance(|r| model.cdf(r)));
    }
    let good = distances.iter().filter(|&&d| d <= tol).count();
    let worst = distances.iter().copied().fold(0.0, f64::max);
    Ok(Check {
        passed: good >= 9,
        detail: format!("{good}/10 seeds with sup-distance <= {tol}; worst {worst:.4}"),
    })
}

fn radial_cdf_two(ctx: &Ctx) -> Result<Check> {
    let model = LsdModel::new(2.0)?;
    let tol = ctx.tol(0.06);
    let spectra = spectra(2, 1000, 500)?;
    let mut good = 0;
    let mut worst: f64 = 0.0;
    let mut zeros_ok = true;
    let mut zero_counts = Vec::new();
    for s in &spectra {
        let d = radial_ecdf_snapped(s, 1e-8)?.sup_distance(|r| model.cdf(r));
        worst = worst.max(d);
        if d <= tol {
            good += 1;
        }
        let zeros = zero_eigen_count(s, 1e-8)?;
        zero_counts.push(zeros);
        zeros_ok &= zeros == 500;
    }
    Ok(Check {
        passed: good >= 9 && zeros_ok,
        detail: format!(
            "{good}/10 seeds with sup-distance <= {tol}; worst {worst:.4}; zero counts {zero_counts:?}"
        ),
    })
}

fn ring_support(ctx: &Ctx) -> Result<Check> {
    let model = LsdModel::new(2.0)?;
    let hole = model.r_inner() - 0.1;
    let edge = model.r_outer() + ctx.tol(0.15);
    // The edge of (1000, 500) draws overshoots r_outer by up to ~0.17; (2000, 1000) stays well inside.
    let spectra = spectra(3, 2000, 1000)?;
    let (mut in_hole, mut max_mod) = (0usize, 0.0f64);
    for s in &spectra {
        in_hole += s.points.iter().filter(|p| p.norm() > 1e-6 && p.norm() < hole).count();
        max_mod = max_mod.max(s.max_modulus());
    }
    Ok(Check {
        passed: in_hole == 0 && max_mod <= edge,
        detail: format!("{in_hole} eigenvalues in (1e-6, {hole:.4}); max |lambda| {max_mod:.4} vs {edge:.4}"),
    })
}

fn unit_ratio_closed_form(ctx: &Ctx) -> Result<Check> {
    let model = LsdModel::new(1.0)?;
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let t = 2.0 * k as f64 / 999.0;
        worst = worst.max((model.g_inverse(t)? - g_inverse_gamma_one(t)).abs());
    }
    let tol = ctx.tol(1e-10);
    Ok(Check {
        passed: worst <= tol,
        detail: format!("max |closed form - numerical| = {worst:.2e} <= {tol:.0e}"),
    })
}

fn master_vs_resolvent(ctx: &Ctx) -> Result<Check> {
    let (rows, cols) = (400, 400);
    let gamma = 1.0;
    let zs = [c64::new(1.0, 0.0), c64::new(1.0, 0.5), c64::new(0.0, 2.0)];
    let ts = [0.3, 1.0];
    let shape = MatrixShape::new(rows, cols)?;
    let law = EntryLaw::gaussian(cols)?;
    let ys = (0..5)
        .map(|k| Ok(xjx(&generate_x(shape, &law, seed(5, k))?)))
        .collect::<Result<Vec<_>>>()?;
    let tol = ctx.tol(0.05);
    let opts = SolverOptions::default();
    let (mut worst_h, mut worst_d) = (0.0f64, 0.0f64);
    for &z in &zs {
        for &t in &ts {
            let sol = solve_master(z, t, gamma, &opts)?;
            let (mut err_h, mut err_d) = (0.0, 0.0);
            for y in &ys {
                let r = resolvent_traces(y, cols, z, t)?;
                err_h += (r.half_trace() - c64::new(0.0, sol.h / gamma)).norm();
                err_d += (r.off_trace() - sol.d / gamma).norm();
            }
            worst_h = worst_h.max(err_h / ys.len() as f64);
            worst_d = worst_d.max(err_d / ys.len() as f64);
        }
    }
    Ok(Check {
        passed: worst_h <= tol && worst_d <= tol,
        detail: format!("worst seed-averaged errors: trace {worst_h:.4}, off-diagonal {worst_d:.4} (tol {tol})"),
    })
}

fn small_t_limit(ctx: &Ctx) -> Result<Check> {
    let gamma = 2.0;
    let zs = [
        // inner hole: |z| < (gamma-1)^{3/2}/sqrt(gamma) = 0.707
        c64::new(0.2, 0.0),
        c64::new(0.0, 0.3),
        c64::new(0.25, 0.25),
        // bulk
        c64::new(1.0, 0.0),
        c64::new(0.0, 1.5),
        c64::new(1.0, 1.0),
        // outer: |z| > sqrt(gamma (gamma + 1)) = 2.449
        c64::new(3.0, 0.0),
        c64::new(2.5, 1.0),
        c64::new(0.0, -3.0),
    ];
    let tol = ctx.tol(0.05);
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    for &z in &zs {
        let s = solve_master(z, 1e-2, gamma, &opts)?;
        worst = worst.max((s.d - limit_b(z, gamma)?.b).norm());
    }
    Ok(Check {
        passed: worst <= tol,
        detail: format!("max |d(z, 0.01 i) - b(z)| = {worst:.4} over 9 points (tol {tol})"),
    })
}

fn quadrature(a: f64, u: c64, nodes: usize) -> (f64, c64) {
    let (mut i_sum, mut j_sum) = (0.0, c64::new(0.0, 0.0));
    for k in 0..nodes {
        let e = c64::cis(std::f64::consts::TAU * k as f64 / nodes as f64);
        let den = a * a + (c64::new(1.0, 0.0) + u * e).norm_sqr();
        i_sum += 1.0 / den;
        j_sum += e / den;
    }
    (i_sum / nodes as f64, j_sum / nodes as f64)
}

fn residue_formulas(ctx: &Ctx) -> Result<Check> {
    let mut rng = stream(VERIFY_SEED, Domain::Experiment, 7);
    let mut worst: f64 = 0.0;
    for _ in 0..400 {
        let h = 0.05 + 2.0 * rng.random::<f64>();
        let d = c64::new(4.0 * rng.random::<f64>() - 2.0, 4.0 * rng.random::<f64>() - 2.0);
        let (i_q, j_q) = quadrature(h, d, 4096);
        worst = worst.max((integral_i(h, d)? - i_q).abs());
        worst = worst.max((integral_j(h, d)? - j_q).norm());
    }
    let tol = ctx.tol(1e-8);
    Ok(Check {
        passed: worst <= tol,
        detail: format!("max closed-form vs quadrature gap {worst:.2e} over 400 points (tol {tol:.0e})"),
    })
}

fn random_cloud(rng: &mut impl Rng, m: usize) -> Result<PointCloud> {
    Ok(PointCloud::new(
        (0..m)
            .map(|_| c64::new(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0))
            .collect(),
    )?)
}

fn wasserstein_oracle(ctx: &Ctx) -> Result<Check> {
    let mut rng = stream(VERIFY_SEED, Domain::Experiment, 8);
    let mut gap: f64 = 0.0;
    for trial in 0..200 {
        let m = 2 + trial % 6;
        let (p, q) = (random_cloud(&mut rng, m)?, random_cloud(&mut rng, m)?);
        gap = gap.max((optimal_matching(&p, &q)?.distance() - wasserstein2_oracle(&p, &q)?).abs());
    }
    let (mut asym, mut triangle): (f64, f64) = (0.0, 0.0);
    let mut zero_ok = true;
    for _ in 0..100 {
        let (a, b, c) = (random_cloud(&mut rng, 32)?, random_cloud(&mut rng, 32)?, random_cloud(&mut rng, 32)?);
        let (ab, ba) = (wasserstein2(&a, &b)?, wasserstein2(&b, &a)?);
        asym = asym.max((ab - ba).abs());
        triangle = triangle.max(wasserstein2(&a, &c)? - ab - wasserstein2(&b, &c)?);
        zero_ok &= wasserstein2(&a, &a)? == 0.0 && ab > 0.0;
    }
    let (t_gap, t_sym, t_tri) = (ctx.tol(1e-10), ctx.tol(1e-12), ctx.tol(1e-10));
    Ok(Check {
        passed: gap <= t_gap && asym <= t_sym && triangle <= t_tri && zero_ok,
        detail: format!(
            "assignment vs brute force {gap:.1e}; asymmetry {asym:.1e}; triangle excess {triangle:.1e}; zero iff equal {zero_ok}"
        ),
    })
}

fn roc_ordering(_ctx: &Ctx) -> Result<Check> {
    let shape = MatrixShape::new(50, 100)?;
    let spec = TestSpec::new(TestKind::T1, shape, EntryLaw::gaussian(100)?, seed(9, 0))?;
    let settings = [
        ("identity alpha^2=10^-2.5", Alternative::Identity { alpha2: 10f64.powf(-2.5) }),
        ("toeplitz tr/N=10^-2", Alternative::Toeplitz { trace: 1e-2 }),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, alt) in settings {
        let curves = roc_many(&TestKind::ALL, &spec, &alt.model(shape)?, 200)?;
        let auc: Vec<f64> = curves.iter().map(|(_, c)| c.auc).collect();
        passed &= auc[0] > auc[1] && auc[0] > auc[2];
        parts.push(format!("{label}: T1 {:.3}, T2 {:.3}, T3 {:.3}", auc[0], auc[1], auc[2]));
    }
    Ok(Check {
        passed,
        detail: parts.join("; "),
    })
}

fn calibration_honesty(ctx: &Ctx) -> Result<Check> {
    let shape = MatrixShape::new(50, 100)?;
    let law = EntryLaw::gaussian(100)?;
    let spec = TestSpec::new(TestKind::T1, shape, law, seed(10, 0))?.with_reps(1000)?;
    let refs = References::build(&spec)?;
    let cal = calibrate_with(&spec, &refs)?;
    let fresh = trial_statistics(
        &[TestKind::T1],
        &MaModel::white(shape),
        &law,
        &refs,
        spec.seed,
        Domain::NullTrial,
        400,
    )?
    .remove(0);
    let rate = fresh.iter().filter(|&&s| s > cal.threshold).count() as f64 / 400.0;
    let (lo, hi) = (0.05 - ctx.tol(0.03), 0.05 + ctx.tol(0.04));
    Ok(Check {
        passed: rate >= lo && rate <= hi,
        detail: format!("false-positive rate {rate:.4} on 400 fresh null trials, band [{lo:.2}, {hi:.2}]"),
    })
}

fn linearization(ctx: &Ctx) -> Result<Check> {
    let shape = MatrixShape::new(30, 40)?;
    let law = EntryLaw::gaussian(40)?;
    let j = make_j(40)?;
    let z = c64::new(1.0, 1.0);
    let slack = 1.0 + ctx.tol(1e-12);
    let mut holds = 0;
    let mut worst_ratio: f64 = 0.0;
    for k in 0..100 {
        let x = generate_x(shape, &law, seed(11, k))?;
        let (lhs, rhs) = linearization_check(&x, &j, z)?;
        worst_ratio = worst_ratio.max(lhs / rhs);
        if lhs <= rhs * slack {
            holds += 1;
        }
    }
    Ok(Check {
        passed: holds == 100,
        detail: format!("inequality held in {holds}/100 trials; max ratio {worst_ratio:.4}"),
    })
}

fn smin_trend(ctx: &Ctx) -> Result<Check> {
    let n = 200;
    let shape = MatrixShape::new(n, n)?;
    let values = smin_experiment(
        shape,
        &EntryLaw::gaussian(n)?,
        &make_j(n)?,
        c64::new(1.0, 0.0),
        300,
        seed(12, 0),
        SminOptions::default(),
    )?;
    let grid = [1e-6, 1e-4, 1e-2, 1e-1];
    let p: Vec<f64> = grid
        .iter()
        .map(|&t| values.iter().filter(|&&v| v <= t).count() as f64 / values.len() as f64)
        .collect();
    let monotone = p.windows(2).all(|w| w[0] <= w[1]);
    let cap = ctx.tol(0.2);
    let passed = monotone && p[1] <= cap && (ctx.scale > 0.0 || p[1] < cap);
    Ok(Check {
        passed,
        detail: format!("P[s_min <= t] on {grid:?} = {p:?}; P at 1e-4 <= {cap}"),
    })
}

fn norm_convergence(ctx: &Ctx) -> Result<Check> {
    let shape = MatrixShape::new(500, 1000)?;
    let law = EntryLaw::gaussian(1000)?;
    let edge = 1.0 + 0.5f64.sqrt();
    let tol = ctx.tol(0.1);
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let gap = (spectral_norm(&generate_x(shape, &law, seed(13, k))?)? - edge).abs();
        worst = worst.max(gap);
        if gap <= tol {
            hits += 1;
        }
    }
    Ok(Check {
        passed: hits >= 95,
        detail: format!("{hits}/100 seeds with | ||X|| - (1 + sqrt(gamma)) | <= {tol}; worst {worst:.4}"),
    })
}
