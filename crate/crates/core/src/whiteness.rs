//! Whiteness tests for a multivariate series built on lag-one sample autocovariances.
//!
//! * `T1`: `W_2` between the eigenvalues of `R1` and a reference cloud of the limit law.
//! * `T2`: the normalized Hilbert-Schmidt energy `N^{-1} tr(R1 R1^*)`.
//! * `T3`: `W_2` between the spectrum of the stacked Hermitian autocovariance and a
//!   Marchenko-Pastur reference.
//!
//! Null distributions are calibrated by Monte-Carlo under white noise.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{autocov_01, autocov_1, simulate_series, EntryLaw, MaModel, MatrixShape};
use crate::error::{Error, Result};
use crate::lsd::{LsdModel, MpModel};
use crate::matrix::{c64, hs_norm_sqr, ComplexMatrix};
use crate::rng::{child_seed, Domain};
use crate::spectra::{eigenvalues, hermitian_eigenvalues, SpectralSample};
use crate::transport::{wasserstein2, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    /// Eigenvalue transport distance to the limit law.
    T1,
    /// Trace energy.
    T2,
    /// Hermitian spectrum transport distance to Marchenko-Pastur.
    T3,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::T1, TestKind::T2, TestKind::T3];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::T1 => "t1",
            TestKind::T2 => "t2",
            TestKind::T3 => "t3",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" | "t1-eig-wasserstein" => Ok(TestKind::T1),
            "t2" | "t2-trace" => Ok(TestKind::T2),
            "t3" | "t3-hermitian-mp" => Ok(TestKind::T3),
            _ => Err(Error::invalid("test", s, "expected one of t1, t2, t3")),
        }
    }
}

/// How the frozen reference clouds are built.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Deterministic quantile points: radii at mid-quantiles, golden-angle phases.
    #[default]
    Stratified,
    /// An i.i.d. sample drawn from the reference seed.
    Random,
}

impl FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stratified" => Ok(ReferenceKind::Stratified),
            "random" => Ok(ReferenceKind::Random),
            _ => Err(Error::invalid("reference", s, "expected stratified or random")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub kind: TestKind,
    pub shape: MatrixShape,
    pub law: EntryLaw,
    /// Master seed for references, calibration and trials.
    pub seed: u64,
    pub calibration_reps: usize,
    pub level: f64,
    pub reference: ReferenceKind,
}

pub const MIN_CALIBRATION_REPS: usize = 50;

impl TestSpec {
    /// A spec with 200 calibration replicates at level 0.05.
    pub fn new(kind: TestKind, shape: MatrixShape, law: EntryLaw, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            shape,
            law,
            seed,
            calibration_reps: 200,
            level: 0.05,
            reference: ReferenceKind::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_reps(mut self, reps: usize) -> Result<Self> {
        self.calibration_reps = reps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_level(mut self, level: f64) -> Result<Self> {
        self.level = level;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reference(mut self, reference: ReferenceKind) -> Self {
        self.reference = reference;
        self
    }

    pub fn with_kind(mut self, kind: TestKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.calibration_reps < MIN_CALIBRATION_REPS {
            return Err(Error::invalid(
                "calibration_reps",
                self.calibration_reps,
                "must be at least 50",
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("level", self.level, "must lie in (0, 1)"));
        }
        if self.law.n != self.shape.cols {
            return Err(Error::mismatch(
                "entry law / shape",
                format!("n = {}", self.shape.cols),
                format!("n = {}", self.law.n),
            ));
        }
        Ok(())
    }
}

/// Frozen reference clouds: `N` points of the limit law and `2N` Marchenko-Pastur points.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub lsd: SpectralSample,
    pub mp: SpectralSample,
}

impl References {
    pub fn build(spec: &TestSpec) -> Result<Self> {
        let gamma = spec.shape.gamma();
        let rows = spec.shape.rows;
        let lsd = LsdModel::new(gamma)?;
        let mp = MpModel::for_gamma(gamma)?;
        Ok(match spec.reference {
            ReferenceKind::Stratified => Self {
                lsd: lsd.stratified(rows)?,
                mp: mp.stratified(2 * rows)?,
            },
            ReferenceKind::Random => Self {
                lsd: lsd.sample(rows, child_seed(spec.seed, Domain::Reference, 0))?,
                mp: mp.sample(2 * rows, child_seed(spec.seed, Domain::Reference, 1))?,
            },
        })
    }
}

fn cloud(sample: &SpectralSample) -> Result<PointCloud> {
    PointCloud::new(sample.points.clone())
}

/// `W_2(eig(R1), reference)`.
pub fn stat_t1(y_obs: &ComplexMatrix, reference: &SpectralSample) -> Result<f64> {
    let spectrum = eigenvalues(&autocov_1(y_obs))?;
    wasserstein2(&cloud(&spectrum)?, &cloud(reference)?)
}

/// `N^{-1} ||R1||_HS^2`.
pub fn stat_t2(y_obs: &ComplexMatrix) -> f64 {
    if y_obs.nrows() == 0 {
        return 0.0;
    }
    hs_norm_sqr(&autocov_1(y_obs)) / y_obs.nrows() as f64
}

/// `W_2(spec(R01), reference)` with the real spectrum embedded in the plane.
pub fn stat_t3(y_obs: &ComplexMatrix, reference: &SpectralSample) -> Result<f64> {
    let spectrum = hermitian_eigenvalues(&autocov_01(y_obs))?;
    wasserstein2(&PointCloud::from_reals(&spectrum)?, &cloud(reference)?)
}

pub fn statistic(kind: TestKind, y_obs: &ComplexMatrix, refs: &References) -> Result<f64> {
    match kind {
        TestKind::T1 => stat_t1(y_obs, &refs.lsd),
        TestKind::T2 => Ok(stat_t2(y_obs)),
        TestKind::T3 => stat_t3(y_obs, &refs.mp),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
    /// `(1 + #{null >= statistic}) / (reps + 1)`.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    /// Null statistics in trial order.
    pub null_table: Vec<f64>,
    pub level: f64,
}

/// The order statistic `sorted[ceil((1 - level) reps) - 1]`.
pub fn null_quantile(table: &[f64], level: f64) -> f64 {
    let mut sorted = table.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((1.0 - level) * sorted.len() as f64).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

impl Calibration {
    pub fn from_table(null_table: Vec<f64>, level: f64) -> Result<Self> {
        if null_table.is_empty() {
            return Err(Error::invalid("null_table", "[]", "must be nonempty"));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid("level", level, "must lie in (0, 1)"));
        }
        Ok(Self {
            threshold: null_quantile(&null_table, level),
            null_table,
            level,
        })
    }

    pub fn p_value(&self, statistic: f64) -> f64 {
        let exceed = self.null_table.iter().filter(|&&s| s >= statistic).count();
        (1 + exceed) as f64 / (self.null_table.len() + 1) as f64
    }

    pub fn report(&self, statistic: f64) -> TestReport {
        TestReport {
            statistic,
            threshold: self.threshold,
            reject: statistic > self.threshold,
            p_value: self.p_value(statistic),
        }
    }
}

/// Statistics of every kind in `kinds` for `count` independent series of `model`,
/// seeded from `(seed, domain, trial)`.
pub fn trial_statistics(
    kinds: &[TestKind],
    model: &MaModel,
    law: &EntryLaw,
    refs: &References,
    seed: u64,
    domain: Domain,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let per_trial: Vec<Vec<f64>> = (0..count as u64)
        .into_par_iter()
        .map(|trial| {
            let y_obs = simulate_series(model, law, child_seed(seed, domain, trial))?;
            kinds.iter().map(|&k| statistic(k, &y_obs, refs)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..kinds.len())
        .map(|k| per_trial.iter().map(|row| row[k]).collect())
        .collect())
}

pub fn calibrate_with(spec: &TestSpec, refs: &References) -> Result<Calibration> {
    spec.validate()?;
    let white = MaModel::white(spec.shape);
    let table = trial_statistics(
        &[spec.kind],
        &white,
        &spec.law,
        refs,
        spec.seed,
        Domain::Calibration,
        spec.calibration_reps,
    )?
    .remove(0);
    Calibration::from_table(table, spec.level)
}

pub fn calibrate(spec: &TestSpec) -> Result<Calibration> {
    calibrate_with(spec, &References::build(spec)?)
}

/// Calibrates `spec` and tests the observed `N x n` series.
pub fn run_test(spec: &TestSpec, y_obs: &ComplexMatrix) -> Result<TestReport> {
    if (y_obs.nrows(), y_obs.ncols()) != (spec.shape.rows, spec.shape.cols) {
        return Err(Error::mismatch(
            "observed series",
            spec.shape.to_string(),
            format!("{}x{}", y_obs.nrows(), y_obs.ncols()),
        ));
    }
    let refs = References::build(spec)?;
    let calibration = calibrate_with(spec, &refs)?;
    Ok(calibration.report(statistic(spec.kind, y_obs, &refs)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// Rejecting when the statistic is at least `c`, sweeping `c` down through
    /// every observed value; tied values move both rates in one step.
    pub fn from_statistics(null: &[f64], alt: &[f64]) -> Result<Self> {
        if null.is_empty() || alt.is_empty() {
            return Err(Error::invalid("statistics", "[]", "both sides must be nonempty"));
        }
        if null.iter().chain(alt).any(|s| !s.is_finite()) {
            return Err(Error::NumericalFailure {
                context: "roc",
                detail: "non-finite statistic".into(),
            });
        }
        let mut pooled: Vec<(f64, bool)> = null
            .iter()
            .map(|&s| (s, false))
            .chain(alt.iter().map(|&s| (s, true)))
            .collect();
        pooled.sort_by(|a, b| b.0.total_cmp(&a.0));

        let (n0, n1) = (null.len() as f64, alt.len() as f64);
        let (mut fp, mut tp) = (0usize, 0usize);
        let mut points = vec![(0.0, 0.0)];
        let mut auc = 0.0;
        let mut i = 0;
        while i < pooled.len() {
            let value = pooled[i].0;
            while i < pooled.len() && pooled[i].0 == value {
                if pooled[i].1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            let next = (fp as f64 / n0, tp as f64 / n1);
            let last = *points.last().expect("nonempty");
            auc += (next.0 - last.0) * (next.1 + last.1) / 2.0;
            points.push(next);
        }
        Ok(Self { points, auc })
    }
}

/// ROC curves of several tests on shared simulated data.
pub fn roc_many(
    kinds: &[TestKind],
    spec: &TestSpec,
    alternative: &MaModel,
    trials_per_side: usize,
) -> Result<Vec<(TestKind, RocCurve)>> {
    if trials_per_side < 50 {
        return Err(Error::invalid("trials_per_side", trials_per_side, "must be at least 50"));
    }
    if alternative.shape() != spec.shape {
        return Err(Error::mismatch(
            "alternative model",
            spec.shape.to_string(),
            alternative.shape().to_string(),
        ));
    }
    spec.validate()?;
    let refs = References::build(spec)?;
    let white = MaModel::white(spec.shape);
    let null = trial_statistics(kinds, &white, &spec.law, &refs, spec.seed, Domain::NullTrial, trials_per_side)?;
    let alt = trial_statistics(
        kinds,
        alternative,
        &spec.law,
        &refs,
        spec.seed,
        Domain::AltTrial,
        trials_per_side,
    )?;
    kinds
        .iter()
        .zip(null.iter().zip(&alt))
        .map(|(&k, (n, a))| Ok((k, RocCurve::from_statistics(n, a)?)))
        .collect()
}

pub fn roc(spec: &TestSpec, alternative: &MaModel, trials_per_side: usize) -> Result<RocCurve> {
    Ok(roc_many(&[spec.kind], spec, alternative, trials_per_side)?.remove(0).1)
}

/// `e^{i phi} Y`, used to check phase invariance of the statistics.
pub fn rotate_phase(y_obs: &ComplexMatrix, phi: f64) -> ComplexMatrix {
    let w = c64::cis(phi);
    ComplexMatrix::from_fn(y_obs.nrows(), y_obs.ncols(), |i, j| y_obs[(i, j)] * w)
}
