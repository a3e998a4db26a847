//! Spectral extraction and the hermitization objects built on `Y - z`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{generate_x_with, EntryLaw, MatrixShape};
use crate::error::{Error, Result};
use crate::matrix::{c64, is_finite, shift, ComplexMatrix};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Eigenvalues,
    SingularValues,
}

/// A multiset of spectral points with the provenance of the source matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub points: Vec<c64>,
    pub kind: SpectrumKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: Option<u64>,
    pub shift: Option<c64>,
}

impl SpectralSample {
    pub fn new(points: Vec<c64>, kind: SpectrumKind, rows: usize, cols: usize) -> Self {
        Self {
            points,
            kind,
            rows,
            cols,
            seed: None,
            shift: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_shift(mut self, z: c64) -> Self {
        self.shift = Some(z);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.norm()).collect()
    }

    pub fn sum(&self) -> c64 {
        self.points.iter().sum()
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Real parts, for singular-value samples and real spectra.
    pub fn reals(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.re).collect()
    }
}

fn require_square(m: &ComplexMatrix, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::mismatch(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn diagnostics(m: &ComplexMatrix) -> String {
    format!(
        "{}x{} matrix, finite = {}, frobenius norm = {:e}",
        m.nrows(),
        m.ncols(),
        is_finite(m),
        m.norm_l2()
    )
}

/// All eigenvalues of a square matrix, with multiplicity.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<SpectralSample> {
    require_square(m, "eigenvalues")?;
    let values = m.eigenvalues().map_err(|e| Error::NumericalFailure {
        context: "eigenvalues",
        detail: format!("{e:?}; {}", diagnostics(m)),
    })?;
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NumericalFailure {
            context: "eigenvalues",
            detail: format!("non-finite eigenvalue; {}", diagnostics(m)),
        });
    }
    Ok(SpectralSample::new(
        values,
        SpectrumKind::Eigenvalues,
        m.nrows(),
        m.ncols(),
    ))
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    require_square(m, "hermitian eigenvalues")?;
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NumericalFailure {
            context: "hermitian eigenvalues",
            detail: format!("{e:?}; {}", diagnostics(m)),
        })
}

/// Singular values `s_0 >= s_1 >= ... >= 0`.
pub fn singular_values(m: &ComplexMatrix) -> Result<SpectralSample> {
    let mut values = m.singular_values().map_err(|e| Error::NumericalFailure {
        context: "singular values",
        detail: format!("{e:?}; {}", diagnostics(m)),
    })?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "singular values",
            detail: format!("non-finite singular value; {}", diagnostics(m)),
        });
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SpectralSample::new(
        values.into_iter().map(|s| c64::new(s.max(0.0), 0.0)).collect(),
        SpectrumKind::SingularValues,
        m.nrows(),
        m.ncols(),
    ))
}

pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.points.first().map_or(0.0, |s| s.re))
}

pub fn smallest_singular_value(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.points.last().map_or(0.0, |s| s.re))
}

/// Number of eigenvalues with `|lambda| <= tol_rel * max |lambda|`.
pub fn zero_eigen_count(sample: &SpectralSample, tol_rel: f64) -> Result<usize> {
    if sample.kind != SpectrumKind::Eigenvalues {
        return Err(Error::invalid("kind", "singular-values", "expected an eigenvalue sample"));
    }
    let cutoff = tol_rel * sample.max_modulus();
    Ok(sample.points.iter().filter(|p| p.norm() <= cutoff).count())
}

/// Empirical distribution of `|lambda|`, each point carrying mass `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialEcdf {
    radii: Vec<f64>,
}

impl RadialEcdf {
    pub fn from_radii(mut radii: Vec<f64>) -> Self {
        radii.sort_by(f64::total_cmp);
        Self { radii }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Fraction of radii `<= r`.
    pub fn eval(&self, r: f64) -> f64 {
        if self.radii.is_empty() {
            return 0.0;
        }
        self.radii.partition_point(|&x| x <= r) as f64 / self.radii.len() as f64
    }

    /// `sup_{r >= 0} |F_emp(r) - cdf(r)|` for a `cdf` that is continuous on
    /// `(0, inf)`; a jump at the origin is allowed and compared at r = 0 only.
    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let m = self.radii.len();
        if m == 0 {
            return 0.0;
        }
        let mf = m as f64;
        let mut worst = (self.eval(0.0) - cdf(0.0)).abs();
        let mut i = 0;
        while i < m {
            let r = self.radii[i];
            let mut j = i;
            while j < m && self.radii[j] == r {
                j += 1;
            }
            let f = cdf(r);
            if r > 0.0 {
                worst = worst.max((i as f64 / mf - f).abs());
            }
            worst = worst.max((j as f64 / mf - f).abs());
            i = j;
        }
        worst
    }
}

pub fn radial_ecdf(sample: &SpectralSample) -> Result<RadialEcdf> {
    if sample.kind != SpectrumKind::Eigenvalues {
        return Err(Error::invalid("kind", "singular-values", "expected an eigenvalue sample"));
    }
    Ok(RadialEcdf::from_radii(sample.radii()))
}

/// Like [`radial_ecdf`], but radii at or below `tol_rel * max |lambda|` are snapped
/// to exactly zero, so rank-deficiency zeros land on the atom of the limit law.
pub fn radial_ecdf_snapped(sample: &SpectralSample, tol_rel: f64) -> Result<RadialEcdf> {
    let ecdf = radial_ecdf(sample)?;
    let cutoff = tol_rel * sample.max_modulus();
    Ok(RadialEcdf::from_radii(
        ecdf.radii.into_iter().map(|r| if r <= cutoff { 0.0 } else { r }).collect(),
    ))
}

/// `[[0, Y - z], [Y* - conj(z), 0]]`.
pub fn hermitize(y: &ComplexMatrix, z: c64) -> Result<ComplexMatrix> {
    require_square(y, "hermitize")?;
    let dim = y.nrows();
    let zero = c64::new(0.0, 0.0);
    Ok(Mat::from_fn(2 * dim, 2 * dim, |i, j| match (i < dim, j < dim) {
        (true, false) => {
            let v = y[(i, j - dim)];
            if i == j - dim { v - z } else { v }
        }
        (false, true) => {
            let v = y[(j, i - dim)].conj();
            if i - dim == j { v - z.conj() } else { v }
        }
        _ => zero,
    }))
}

/// Normalized block traces of `Q(z, it) = (Sigma(z) - it)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventTraces {
    pub z: c64,
    pub t: f64,
    /// `(1/n) tr Q_00`.
    pub q00: c64,
    /// `(1/n) tr Q_01`.
    pub q01: c64,
    pub rows: usize,
    pub cols: usize,
}

impl ResolventTraces {
    /// `(1/2N) tr Q`; tends to `i h / gamma`.
    pub fn half_trace(&self) -> c64 {
        self.q00 * (self.cols as f64 / self.rows as f64)
    }

    /// `(1/N) tr Q_01`; tends to `d / gamma`.
    pub fn off_trace(&self) -> c64 {
        self.q01 * (self.cols as f64 / self.rows as f64)
    }
}

/// Block traces through a dense solve of the `2N x 2N` shifted hermitization.
/// `cols` is the sample count `n` used for normalization.
pub fn resolvent_traces(y: &ComplexMatrix, cols: usize, z: c64, t: f64) -> Result<ResolventTraces> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", t, "must be positive and finite"));
    }
    if cols == 0 {
        return Err(Error::invalid("n", cols, "must be positive"));
    }
    let dim = y.nrows();
    let sigma = hermitize(y, z)?;
    let shifted = shift(&sigma, c64::new(0.0, t));
    let q = shifted.partial_piv_lu().inverse();
    if !is_finite(&q) {
        // ||Q|| <= 1/t always; a non-finite inverse means the factorization broke down.
        return Err(Error::NumericalFailure {
            context: "resolvent solve",
            detail: format!(
                "condition estimate {:e}; {}",
                (sigma.norm_l2() + t) / t,
                diagnostics(&sigma)
            ),
        });
    }
    let n = cols as f64;
    let q00: c64 = (0..dim).map(|i| q[(i, i)]).sum::<c64>() / n;
    let q01: c64 = (0..dim).map(|i| q[(i, dim + i)]).sum::<c64>() / n;
    Ok(ResolventTraces {
        z,
        t,
        q00,
        q01,
        rows: dim,
        cols,
    })
}

/// The smoothing device `(1 - n^-20)^{-1/2} (X + n^-10 X')` with Gaussian `X'`.
pub fn smooth_entries(x: &ComplexMatrix, perturbation: &ComplexMatrix) -> ComplexMatrix {
    let n = x.ncols() as f64;
    let eps = n.powi(-10);
    let norm = (1.0 - n.powi(-20)).sqrt().recip();
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] + perturbation[(i, j)] * eps) * norm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SminOptions {
    /// Apply [`smooth_entries`] before forming `X A X* - z`. Off by default.
    pub smoothing: bool,
}

fn check_bounded_a(a: &ComplexMatrix, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::mismatch(
            "A",
            format!("{n}x{n}"),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let sv = singular_values(a)?;
    let (top, bottom) = (sv.points[0].re, sv.points[n - 1].re);
    if !(bottom > 1e-12 * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular {
            context: "A must have singular values bounded away from 0",
            smin: bottom,
        });
    }
    Ok(())
}

/// Per-trial `s_{N-1}(X A X* - z)`; trial `i` uses the `i`-th entry stream of `seed`.
pub fn smin_experiment(
    shape: MatrixShape,
    law: &EntryLaw,
    a: &ComplexMatrix,
    z: c64,
    trials: usize,
    seed: u64,
    opts: SminOptions,
) -> Result<Vec<f64>> {
    check_bounded_a(a, shape.cols)?;
    let perturb_law = EntryLaw::gaussian(shape.cols)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, Domain::Entries, i as u64);
            let mut x = generate_x_with(shape, law, &mut rng)?;
            if opts.smoothing {
                let mut prng = rng::stream(seed, Domain::Perturbation, i as u64);
                let xp = generate_x_with(shape, &perturb_law, &mut prng)?;
                x = smooth_entries(&x, &xp);
            }
            let m = shift(&(&x * a * x.adjoint()), z);
            smallest_singular_value(&m)
        })
        .collect()
}

/// `(||(X A X* - z)^{-1}||, ||H^{-1}||)` with `H = [[A^{-1}, X*], [X, z]]`.
pub fn linearization_check(x: &ComplexMatrix, a: &ComplexMatrix, z: c64) -> Result<(f64, f64)> {
    let (dim, n) = (x.nrows(), x.ncols());
    if z == c64::new(0.0, 0.0) {
        return Err(Error::invalid("z", z, "must be nonzero"));
    }
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::mismatch(
            "A",
            format!("{n}x{n}"),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let smin_a = smallest_singular_value(a)?;
    if !(smin_a > 0.0) {
        return Err(Error::Singular { context: "A", smin: smin_a });
    }
    let a_inv = a.partial_piv_lu().inverse();
    let m = shift(&(x * a * x.adjoint()), z);
    let smin_m = smallest_singular_value(&m)?;
    if !(smin_m > 0.0) {
        return Err(Error::Singular { context: "X A X* - z", smin: smin_m });
    }
    let h = Mat::from_fn(n + dim, n + dim, |i, j| match (i < n, j < n) {
        (true, true) => a_inv[(i, j)],
        (true, false) => x[(j - n, i)].conj(),
        (false, true) => x[(i - n, j)],
        (false, false) => {
            if i == j { z } else { c64::new(0.0, 0.0) }
        }
    });
    let smin_h = smallest_singular_value(&h)?;
    if !(smin_h > 0.0) {
        return Err(Error::Singular { context: "H", smin: smin_h });
    }
    Ok((smin_m.recip(), smin_h.recip()))
}
