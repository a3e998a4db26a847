//! Random and deterministic matrices: entry laws, the circulant shift, MA(p)
//! series and the circular-lag sample autocovariance estimators.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c64, identity, ComplexMatrix};
use crate::rng::{self, Domain};

/// Complex entry distributions with mean 0, variance `1/n` and `E x^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    /// `(U + iV) / sqrt(2n)` with independent standard normals.
    #[default]
    ComplexGaussian,
    /// `exp(i k pi/2) / sqrt(n)`, `k` uniform on `{0, 1, 2, 3}`.
    ComplexBernoulliPhase,
    /// Uniform on the disc of radius `sqrt(2/n)`.
    UniformPhaseDisc,
}

impl EntryKind {
    pub fn name(self) -> &'static str {
        match self {
            EntryKind::ComplexGaussian => "complex-gaussian",
            EntryKind::ComplexBernoulliPhase => "complex-bernoulli-phase",
            EntryKind::UniformPhaseDisc => "uniform-phase-disc",
        }
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complex-gaussian" | "gaussian" => Ok(EntryKind::ComplexGaussian),
            "complex-bernoulli-phase" | "qpsk" => Ok(EntryKind::ComplexBernoulliPhase),
            "uniform-phase-disc" | "disc" => Ok(EntryKind::UniformPhaseDisc),
            // Real laws have |n E x^2| = 1; so does anything we do not know about.
            other => Err(Error::UnsupportedEntryLaw(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryLaw {
    pub kind: EntryKind,
    pub n: usize,
}

impl EntryLaw {
    pub fn new(kind: EntryKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", n, "must be positive"));
        }
        Ok(Self { kind, n })
    }

    pub fn gaussian(n: usize) -> Result<Self> {
        Self::new(EntryKind::ComplexGaussian, n)
    }

    /// Parses a law name; real-valued laws are rejected.
    pub fn from_name(name: &str, n: usize) -> Result<Self> {
        Self::new(name.parse()?, n)
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `n E x^2`, which must stay strictly inside the unit disc.
    pub fn scaled_pseudo_variance(&self) -> c64 {
        c64::new(0.0, 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> c64 {
        let n = self.n as f64;
        match self.kind {
            EntryKind::ComplexGaussian => {
                let s = (2.0 * n).sqrt().recip();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                c64::new(re * s, im * s)
            }
            EntryKind::ComplexBernoulliPhase => {
                let s = n.sqrt().recip();
                match rng.random_range(0..4u8) {
                    0 => c64::new(s, 0.0),
                    1 => c64::new(0.0, s),
                    2 => c64::new(-s, 0.0),
                    _ => c64::new(0.0, -s),
                }
            }
            EntryKind::UniformPhaseDisc => {
                let radius = (2.0 / n).sqrt() * rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                c64::from_polar(radius, theta)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixShape {
    /// Dimension `N`.
    pub rows: usize,
    /// Sample count `n`.
    pub cols: usize,
}

impl MatrixShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::invalid("N", rows, "must be positive"));
        }
        if cols == 0 {
            return Err(Error::invalid("n", cols, "must be positive"));
        }
        Ok(Self { rows, cols })
    }

    /// `N / n`.
    pub fn gamma(&self) -> f64 {
        self.rows as f64 / self.cols as f64
    }
}

impl fmt::Display for MatrixShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.rows, self.cols)
    }
}

fn check_law(shape: MatrixShape, law: &EntryLaw) -> Result<()> {
    if law.n != shape.cols {
        return Err(Error::mismatch("entry law variance 1/n", shape.cols, law.n));
    }
    Ok(())
}

/// `N x n` matrix of i.i.d. draws; deterministic in `seed`.
pub fn generate_x(shape: MatrixShape, law: &EntryLaw, seed: u64) -> Result<ComplexMatrix> {
    generate_x_with(shape, law, &mut rng::stream(seed, Domain::Entries, 0))
}

pub fn generate_x_with<R: Rng + ?Sized>(
    shape: MatrixShape,
    law: &EntryLaw,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    check_law(shape, law)?;
    let mut x = Mat::<c64>::zeros(shape.rows, shape.cols);
    for j in 0..shape.cols {
        for i in 0..shape.rows {
            x[(i, j)] = law.sample(rng);
        }
    }
    Ok(x)
}

/// Circulant shift with `J e_k = e_{k+1 mod n}`.
pub fn make_j(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", n, "must be positive"));
    }
    Ok(Mat::from_fn(n, n, |i, j| {
        if i == (j + 1) % n {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    }))
}

/// Columns of `m` shifted circularly: column `t` of the result is column
/// `(t + offset) mod n` of `m`. `offset = 1` gives `m J`.
pub fn shift_columns(m: &ComplexMatrix, offset: isize) -> ComplexMatrix {
    let n = m.ncols() as isize;
    Mat::from_fn(m.nrows(), m.ncols(), |i, t| {
        m[(i, (t as isize + offset).rem_euclid(n) as usize)]
    })
}

/// `Y = X A X*` for any conformable `n x n` matrix `A`.
pub fn product_y(x: &ComplexMatrix, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.nrows() != x.ncols() || a.ncols() != x.ncols() {
        return Err(Error::mismatch(
            "X A X*",
            format!("{0}x{0}", x.ncols()),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    Ok(x * a * x.adjoint())
}

/// `X J X*` without forming `J`.
pub fn xjx(x: &ComplexMatrix) -> ComplexMatrix {
    shift_columns(x, 1) * x.adjoint()
}

/// `y_t = sum_i B_i w_{t-i}` with circular lags.
#[derive(Debug, Clone)]
pub struct MaModel {
    coeffs: Vec<ComplexMatrix>,
    samples: usize,
}

impl MaModel {
    pub fn new(coeffs: Vec<ComplexMatrix>, samples: usize) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::invalid("p", "-1", "need at least B_0"));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::invalid("N", 0, "must be positive"));
        }
        if samples == 0 {
            return Err(Error::invalid("n", 0, "must be positive"));
        }
        for b in &coeffs {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::mismatch(
                    "MA coefficient",
                    format!("{dim}x{dim}"),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
        }
        Ok(Self { coeffs, samples })
    }

    /// The null model: `p = 0`, `B_0 = I`.
    pub fn white(shape: MatrixShape) -> Self {
        Self {
            coeffs: vec![identity(shape.rows)],
            samples: shape.cols,
        }
    }

    /// `B_0 = I` and the given `B_1`.
    pub fn ma1(b1: ComplexMatrix, samples: usize) -> Result<Self> {
        let dim = b1.nrows();
        Self::new(vec![identity(dim), b1], samples)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    pub fn shape(&self) -> MatrixShape {
        MatrixShape {
            rows: self.coeffs[0].nrows(),
            cols: self.samples,
        }
    }
}

fn is_identity(m: &ComplexMatrix) -> bool {
    m.nrows() == m.ncols()
        && (0..m.ncols()).all(|j| {
            (0..m.nrows()).all(|i| m[(i, j)] == if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
        })
}

fn is_zero(m: &ComplexMatrix) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)] == c64::new(0.0, 0.0)))
}

/// `N x n` observations `[y_0 ... y_{n-1}]` driven by `W = sqrt(n) X`.
pub fn simulate_series(model: &MaModel, law: &EntryLaw, seed: u64) -> Result<ComplexMatrix> {
    simulate_series_with(model, law, &mut rng::stream(seed, Domain::Entries, 0))
}

pub fn simulate_series_with<R: Rng + ?Sized>(
    model: &MaModel,
    law: &EntryLaw,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let shape = model.shape();
    let x = generate_x_with(shape, law, rng)?;
    let root_n = (shape.cols as f64).sqrt();
    let w = Mat::from_fn(shape.rows, shape.cols, |i, j| x[(i, j)] * root_n);
    Ok(filter_series(model, &w))
}

/// Applies the MA filter to a given innovation matrix `W`.
pub fn filter_series(model: &MaModel, w: &ComplexMatrix) -> ComplexMatrix {
    let mut y = Mat::<c64>::zeros(w.nrows(), w.ncols());
    for (lag, b) in model.coeffs.iter().enumerate() {
        if is_zero(b) {
            continue;
        }
        let lagged = shift_columns(w, -(lag as isize));
        if is_identity(b) {
            y += &lagged;
        } else {
            y += b * &lagged;
        }
    }
    y
}

/// Toeplitz `b_ij = a exp(-8|i-j|/N)` with `a` scaled so that
/// `tr(B B*) / N = target_norm`.
pub fn make_toeplitz_b1(dim: usize, target_norm: f64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::invalid("N", dim, "must be positive"));
    }
    if !(target_norm > 0.0 && target_norm.is_finite()) {
        return Err(Error::invalid("target_norm", target_norm, "must be positive and finite"));
    }
    let n = dim as f64;
    let profile = |k: usize| (-8.0 * k as f64 / n).exp();
    // sum_{i,j} exp(-16|i-j|/N) = N + 2 sum_{k>=1} (N-k) exp(-16k/N)
    let hs: f64 = n + 2.0 * (1..dim).map(|k| (n - k as f64) * profile(k).powi(2)).sum::<f64>();
    let scale = (target_norm * n / hs).sqrt();
    Ok(Mat::from_fn(dim, dim, |i, j| c64::new(scale * profile(i.abs_diff(j)), 0.0)))
}

/// `R_1 = (1/n) sum_t y_t y_{t-1}*`, indices mod `n`.
pub fn autocov_1(y_obs: &ComplexMatrix) -> ComplexMatrix {
    let n = y_obs.ncols() as f64;
    let mut r = shift_columns(y_obs, 1) * y_obs.adjoint();
    r *= faer::Scale(c64::new(1.0 / n, 0.0));
    r
}

/// `R_{0,1} = (1/n) sum_t [y_t; y_{t-1}] [y_t; y_{t-1}]*`, a `2N x 2N` Hermitian matrix.
pub fn autocov_01(y_obs: &ComplexMatrix) -> ComplexMatrix {
    let (dim, n) = (y_obs.nrows(), y_obs.ncols());
    let lagged = shift_columns(y_obs, -1);
    let stacked = Mat::from_fn(2 * dim, n, |i, t| {
        if i < dim {
            y_obs[(i, t)]
        } else {
            lagged[(i - dim, t)]
        }
    });
    let mut r = &stacked * stacked.adjoint();
    r *= faer::Scale(c64::new(1.0 / n as f64, 0.0));
    // Exact Hermitian symmetry; the product is only symmetric to rounding.
    for j in 0..2 * dim {
        r[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (r[(i, j)] + r[(j, i)].conj()) * 0.5;
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
    }
    r
}
