//! Dense complex matrices. The carrier type is `faer::Mat<c64>`; this module only
//! adds the handful of helpers the rest of the crate shares.

use faer::Mat;

/// Same type as `faer::c64`; named through `num_complex` for its serde support.
#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex64;

pub type ComplexMatrix = Mat<c64>;

pub fn identity(n: usize) -> ComplexMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    Mat::from_fn(rows, cols, |_, _| c64::new(0.0, 0.0))
}

pub fn scaled(m: &ComplexMatrix, s: c64) -> ComplexMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// `M - z I` for a square `M`.
pub fn shift(m: &ComplexMatrix, z: c64) -> ComplexMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows().min(m.ncols()) {
        out[(i, i)] -= z;
    }
    out
}

pub fn trace(m: &ComplexMatrix) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Squared Hilbert-Schmidt (Frobenius) norm, summed entrywise.
pub fn hs_norm_sqr(m: &ComplexMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}
