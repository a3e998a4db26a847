//! One function per subcommand. Each writes its files under `settings.out` and
//! returns the paths plus a JSON summary that the binary prints.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use xjx_core::ensemble::{generate_x, make_j, xjx, EntryLaw, MatrixShape};
use xjx_core::lsd::LsdModel;
use xjx_core::master::{limit_b, solve_master_path, Regime, SolverOptions};
use xjx_core::spectra::{eigenvalues, radial_ecdf_snapped, smin_experiment, zero_eigen_count, SminOptions};
use xjx_core::whiteness::{roc_many, run_test, TestKind, TestSpec};
use xjx_core::c64;

use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, read_matrix_csv, write_csv, write_json, Meta};

/// Relative cutoff for counting an eigenvalue as an exact zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

fn out_path(settings: &Settings, name: &str) -> PathBuf {
    settings.out.join(name)
}

fn ensemble_spectrum(settings: &Settings) -> Result<xjx_core::spectra::SpectralSample> {
    let law = settings.entry_law()?;
    let x = generate_x(settings.shape, &law, settings.seed)?;
    Ok(eigenvalues(&xjx(&x))?.with_seed(settings.seed))
}

/// Eigenvalues of one draw of `X J X*` and the support of the limit law.
pub fn cmd_scatter(settings: &Settings) -> Result<Outcome> {
    let meta = Meta::of(settings);
    let spectrum = ensemble_spectrum(settings)?;
    let model = LsdModel::new(settings.shape.gamma())?;
    let rows: Vec<Vec<String>> = spectrum.points.iter().map(|p| vec![fmt_f64(p.re), fmt_f64(p.im)]).collect();
    let csv = write_csv(&out_path(settings, "scatter.csv"), &meta, &["re", "im"], &rows)?;
    let summary = json!({
        "gamma": settings.shape.gamma(),
        "rows": settings.shape.rows,
        "cols": settings.shape.cols,
        "r_inner": model.r_inner(),
        "r_outer": model.r_outer(),
        "atom0": model.atom0(),
        "count": spectrum.len(),
        "max_modulus": spectrum.max_modulus(),
        "zero_count": zero_eigen_count(&spectrum, ZERO_TOL)?,
    });
    let js = write_json(&out_path(settings, "support.json"), &meta, &summary)?;
    Ok(Outcome {
        files: vec![csv, js],
        summary,
    })
}

/// Theoretical and empirical radial distribution functions on a uniform grid.
pub fn cmd_cdf(settings: &Settings) -> Result<Outcome> {
    let meta = Meta::of(settings);
    let spectrum = ensemble_spectrum(settings)?;
    let model = LsdModel::new(settings.shape.gamma())?;
    let ecdf = radial_ecdf_snapped(&spectrum, ZERO_TOL)?;
    let points = settings.grid.unwrap_or(201);
    let r_max = 1.05 * model.r_outer().max(spectrum.max_modulus());
    let rows: Vec<Vec<String>> = (0..points)
        .map(|k| {
            let r = r_max * k as f64 / (points - 1) as f64;
            vec![fmt_f64(r), fmt_f64(model.cdf(r)), fmt_f64(ecdf.eval(r))]
        })
        .collect();
    let csv = write_csv(&out_path(settings, "cdf.csv"), &meta, &["r", "F_theory", "F_empirical"], &rows)?;
    let summary = json!({
        "gamma": settings.shape.gamma(),
        "rows": settings.shape.rows,
        "cols": settings.shape.cols,
        "grid_points": points,
        "sup_distance": ecdf.sup_distance(|r| model.cdf(r)),
    });
    let js = write_json(&out_path(settings, "cdf.json"), &meta, &summary)?;
    Ok(Outcome {
        files: vec![csv, js],
        summary,
    })
}

/// Calibrated whiteness test of a user-supplied `N x n` series.
pub fn cmd_test(settings: &Settings, input: &Path) -> Result<Outcome> {
    let y_obs = read_matrix_csv(input)?;
    let shape = MatrixShape::new(y_obs.nrows(), y_obs.ncols())?;
    if settings.shape_explicit && shape != settings.shape {
        return Err(CliError::Core(xjx_core::Error::DimensionMismatch {
            context: "input series vs configured shape",
            expected: settings.shape.to_string(),
            found: shape.to_string(),
        }));
    }
    let law = EntryLaw::new(settings.law, shape.cols)?;
    let spec = TestSpec::new(settings.test, shape, law, settings.seed)?
        .with_reps(settings.reps)?
        .with_level(settings.level)?
        .with_reference(settings.reference);
    let report = run_test(&spec, &y_obs)?;
    let summary = json!({
        "test": settings.test,
        "rows": shape.rows,
        "cols": shape.cols,
        "law": settings.law,
        "level": settings.level,
        "calibration_reps": settings.reps,
        "reference": settings.reference,
        "statistic": report.statistic,
        "threshold": report.threshold,
        "reject": report.reject,
        "p_value": report.p_value,
    });
    let meta = Meta::of(settings);
    let js = write_json(&out_path(settings, "test_report.json"), &meta, &summary)?;
    Ok(Outcome {
        files: vec![js],
        summary,
    })
}

/// ROC curves of all three tests against the configured alternative.
pub fn cmd_roc(settings: &Settings) -> Result<Outcome> {
    let alt = settings
        .alt
        .ok_or_else(|| CliError::usage("roc needs --alt identity:ALPHA2 or toeplitz:TRACE"))?;
    let trials = settings.trials.unwrap_or(200);
    let law = settings.entry_law()?;
    let spec = TestSpec::new(settings.test, settings.shape, law, settings.seed)?
        .with_reps(settings.reps)?
        .with_reference(settings.reference);
    let curves = roc_many(&TestKind::ALL, &spec, &alt.model(settings.shape)?, trials)?;
    let meta = Meta::of(settings);
    let mut files = Vec::new();
    let mut aucs = serde_json::Map::new();
    for (kind, curve) in &curves {
        let rows: Vec<Vec<String>> = curve.points.iter().map(|(f, t)| vec![fmt_f64(*f), fmt_f64(*t)]).collect();
        files.push(write_csv(&out_path(settings, &format!("roc_{kind}.csv")), &meta, &["fpr", "tpr"], &rows)?);
        aucs.insert(kind.to_string(), json!(curve.auc));
    }
    let summary = json!({
        "rows": settings.shape.rows,
        "cols": settings.shape.cols,
        "alternative": alt,
        "trials_per_side": trials,
        "reference": settings.reference,
        "auc": aucs,
    });
    files.push(write_json(&out_path(settings, "roc.json"), &meta, &summary)?);
    Ok(Outcome { files, summary })
}

pub const DEFAULT_Z: [c64; 5] = [
    c64::new(0.5, 0.0),
    c64::new(1.0, 0.0),
    c64::new(1.0, 0.5),
    c64::new(0.0, 2.0),
    c64::new(3.0, 0.0),
];
pub const DEFAULT_T: [f64; 4] = [100.0, 1.0, 0.1, 0.01];

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Bulk => "bulk",
        Regime::Outer => "outer",
        Regime::InnerHole => "inner-hole",
    }
}

/// Solutions of the fixed-point system on a `(z, t)` grid; failures are flagged per row.
pub fn cmd_master(settings: &Settings) -> Result<Outcome> {
    let gamma = settings.shape.gamma();
    let zs = settings.z.clone().unwrap_or_else(|| DEFAULT_Z.to_vec());
    let mut ts = settings.t.clone().unwrap_or_else(|| DEFAULT_T.to_vec());
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let t_min = *ts.last().expect("nonempty t grid");
    let opts = SolverOptions::default();
    let nan = || fmt_f64(f64::NAN);
    let mut rows = Vec::new();
    let (mut failures, mut worst) = (0usize, 0.0f64);
    for &z in &zs {
        let limit = limit_b(z, gamma);
        let limit_cols = |t: f64| -> Vec<String> {
            match (&limit, t == t_min) {
                (Ok(b), true) => vec![fmt_f64(b.b.re), fmt_f64(b.b.im), regime_name(b.regime).into()],
                (Err(_), true) => vec![nan(), nan(), "undefined".into()],
                _ => vec![String::new(), String::new(), String::new()],
            }
        };
        match solve_master_path(z, &ts, gamma, &opts) {
            Ok(sols) => {
                for s in sols {
                    worst = worst.max(s.max_residual());
                    let mut row = vec![
                        fmt_f64(z.re),
                        fmt_f64(z.im),
                        fmt_f64(s.t),
                        fmt_f64(s.h),
                        fmt_f64(s.d.re),
                        fmt_f64(s.d.im),
                        fmt_f64(s.res_u),
                        fmt_f64(s.res_v),
                        "ok".into(),
                    ];
                    row.extend(limit_cols(s.t));
                    rows.push(row);
                }
            }
            Err(e) => {
                failures += 1;
                for &t in &ts {
                    let mut row = vec![fmt_f64(z.re), fmt_f64(z.im), fmt_f64(t)];
                    row.extend((0..5).map(|_| nan()));
                    row.push(format!("failed: {}", e.to_string().replace(',', ";")));
                    row.extend(limit_cols(t));
                    rows.push(row);
                }
            }
        }
    }
    let meta = Meta::of(settings);
    let columns = [
        "z_re", "z_im", "t", "h", "d_re", "d_im", "res_u", "res_v", "status", "b_re", "b_im", "regime",
    ];
    let csv = write_csv(&out_path(settings, "master.csv"), &meta, &columns, &rows)?;
    let summary = json!({
        "gamma": gamma,
        "z_count": zs.len(),
        "t": ts,
        "failures": failures,
        "max_residual": worst,
    });
    let js = write_json(&out_path(settings, "master.json"), &meta, &summary)?;
    Ok(Outcome {
        files: vec![csv, js],
        summary,
    })
}

pub const SMIN_GRID: [f64; 4] = [1e-6, 1e-4, 1e-2, 1e-1];

/// Smallest singular values of `X J X* - z` over independent trials.
pub fn cmd_smin(settings: &Settings) -> Result<Outcome> {
    let z = settings.z.as_ref().and_then(|v| v.first().copied()).unwrap_or(c64::new(1.0, 0.0));
    let trials = settings.trials.unwrap_or(100);
    let law = settings.entry_law()?;
    let j = make_j(settings.shape.cols)?;
    let values = smin_experiment(settings.shape, &law, &j, z, trials, settings.seed, SminOptions::default())?;
    let meta = Meta::of(settings);
    let rows: Vec<Vec<String>> = values.iter().enumerate().map(|(k, v)| vec![k.to_string(), fmt_f64(*v)]).collect();
    let csv = write_csv(&out_path(settings, "smin.csv"), &meta, &["trial", "s_min"], &rows)?;
    let ecdf: Vec<Value> = SMIN_GRID
        .iter()
        .map(|&t| {
            let p = values.iter().filter(|&&v| v <= t).count() as f64 / values.len() as f64;
            json!({ "t": t, "p": p })
        })
        .collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let summary = json!({
        "rows": settings.shape.rows,
        "cols": settings.shape.cols,
        "z": [z.re, z.im],
        "trials": trials,
        "min": sorted.first(),
        "median": sorted[sorted.len() / 2],
        "ecdf": ecdf,
    });
    let js = write_json(&out_path(settings, "smin.json"), &meta, &summary)?;
    Ok(Outcome {
        files: vec![csv, js],
        summary,
    })
}
