//! Random-matrix toolkit for the one-step sample autocovariance matrix `X J X*`
//! of a high-dimensional white-noise series.
//!
//! The crate is organised bottom-up:
//!
//! - [`ensemble`]: entry laws, the circulant shift `J`, moving-average series and
//!   the sample autocovariance estimators.
//! - [`spectra`]: eigen/singular spectra, hermitization, resolvent traces and the
//!   smallest-singular-value experiments.
//! - [`lsd`]: the closed-form limit law (radial CDF, density, quantiles, sampling)
//!   and the Marchenko-Pastur reference law.
//! - [`master`]: the fixed-point system for the limit singular-value law of
//!   `Y - z` and its small-`t` limit.
//! - [`transport`]: exact 2-Wasserstein distance between equal-size clouds.
//! - [`whiteness`]: the three whiteness statistics, Monte-Carlo calibration and
//!   ROC sweeps.

pub mod ensemble;
pub mod error;
pub mod lsd;
pub mod master;
pub mod matrix;
pub mod rng;
pub mod spectra;
pub mod transport;
pub mod whiteness;

pub use error::{Error, Result};
pub use matrix::{c64, ComplexMatrix};
