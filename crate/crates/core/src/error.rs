use thiserror::Error;

use crate::matrix::c64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported entry law `{0}`: entries must be genuinely complex (|n E x^2| < 1)")]
    UnsupportedEntryLaw(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("{what} = {value} outside the domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("numerical failure in {context}: {detail}")]
    NumericalFailure {
        context: &'static str,
        detail: String,
    },

    #[error("singular matrix in {context} (smallest singular value {smin:e})")]
    Singular { context: &'static str, smin: f64 },

    #[error("limit density is unbounded near the origin; |z| = {radius:e} is below the floor {floor:e}")]
    UnboundedDensity { radius: f64, floor: f64 },

    #[error("fixed-point solver did not converge at z = {z}, t = {t:e}: residual {residual:e} after {iterations} iterations")]
    NoConvergence {
        z: c64,
        t: f64,
        residual: f64,
        iterations: usize,
        trajectory: Vec<(f64, f64)>,
    },

    #[error("b(z) is undefined at z = 0")]
    UndefinedAtOrigin,

    #[error("point clouds have unequal supports ({left} vs {right} points)")]
    UnequalSupports { left: usize, right: usize },

    #[error("brute-force oracle is capped at {cap} points, got {size}")]
    SizeCapExceeded { size: usize, cap: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: impl ToString, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            reason,
        }
    }

    pub(crate) fn mismatch(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures of the numerical kernels, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. }
                | Error::Singular { .. }
                | Error::NoConvergence { .. }
                | Error::UnboundedDensity { .. }
        )
    }
}
