//! The limit spectral law of `X J X*` and the Marchenko-Pastur reference law.
//!
//! The limit law is rotationally invariant. Its radial CDF is
//! `F(r) = g^{-1}(r^2) / gamma` on the bulk, where
//! `g(y) = y (1 - gamma + 2y)^2 / (y + 1)` on `[0 v (gamma - 1), gamma]`; for
//! `gamma > 1` there is an atom of mass `1 - 1/gamma` at the origin.

pub mod mp;

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::c64;
use crate::rng::{self, Domain};
use crate::spectra::{SpectralSample, SpectrumKind};

pub use mp::{mp_sample, MpModel};

/// Below this radius the `gamma = 1` density is reported as unbounded.
pub const DENSITY_FLOOR: f64 = 1e-6;

const REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsdModel {
    gamma: f64,
    r_inner: f64,
    r_outer: f64,
    atom0: f64,
    y_lo: f64,
    y_hi: f64,
}

impl LsdModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", gamma, "must be positive and finite"));
        }
        let excess = (gamma - 1.0).max(0.0);
        Ok(Self {
            gamma,
            r_inner: excess.powf(1.5) / gamma.sqrt(),
            r_outer: (gamma * (gamma + 1.0)).sqrt(),
            atom0: if gamma > 1.0 { 1.0 - gamma.recip() } else { 0.0 },
            y_lo: excess,
            y_hi: gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Inner radius of the support ring; 0 when `gamma <= 1`.
    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    /// Mass of the atom at the origin.
    pub fn atom0(&self) -> f64 {
        self.atom0
    }

    /// Domain `[y_lo, y_hi]` of `g`.
    pub fn y_range(&self) -> (f64, f64) {
        (self.y_lo, self.y_hi)
    }

    /// Range `[r_inner^2, r_outer^2]` of `g`.
    pub fn t_range(&self) -> (f64, f64) {
        (self.r_inner * self.r_inner, self.r_outer * self.r_outer)
    }

    fn g_raw(&self, y: f64) -> f64 {
        let a = 1.0 - self.gamma + 2.0 * y;
        y * a * a / (y + 1.0)
    }

    /// `g'(y) = (c + 2y)(4y^2 + 6y + c) / (y + 1)^2` with `c = 1 - gamma`.
    pub fn g_prime(&self, y: f64) -> f64 {
        let c = 1.0 - self.gamma;
        (c + 2.0 * y) * (4.0 * y * y + 6.0 * y + c) / ((y + 1.0) * (y + 1.0))
    }

    fn clamp_into(&self, what: &'static str, v: f64, lo: f64, hi: f64) -> Result<f64> {
        let slack = REL_SLACK * hi.abs().max(1.0);
        if !(v >= lo - slack && v <= hi + slack) {
            return Err(Error::Domain { what, value: v, lo, hi });
        }
        Ok(v.clamp(lo, hi))
    }

    pub fn g(&self, y: f64) -> Result<f64> {
        let y = self.clamp_into("y", y, self.y_lo, self.y_hi)?;
        Ok(self.g_raw(y))
    }

    /// The unique `y` in `[y_lo, y_hi]` with `g(y) = t`.
    pub fn g_inverse(&self, t: f64) -> Result<f64> {
        let (t_lo, t_hi) = self.t_range();
        let t = self.clamp_into("t", t, t_lo, t_hi)?;
        if t == t_lo {
            return Ok(self.y_lo);
        }
        if t == t_hi {
            return Ok(self.y_hi);
        }
        Ok(self.invert_bracketed(t))
    }

    // Safeguarded Newton on a monotone bracket: a Newton step is taken only when it
    // stays strictly inside the current bracket, otherwise the bracket is bisected.
    fn invert_bracketed(&self, t: f64) -> f64 {
        let (mut lo, mut hi) = (self.y_lo, self.y_hi);
        let tol = 1e-15 * t.max(1.0);
        let mut y = 0.5 * (lo + hi);
        for _ in 0..200 {
            let resid = self.g_raw(y) - t;
            if resid.abs() <= tol {
                return y;
            }
            if resid > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(1e-300) {
                break;
            }
            let slope = self.g_prime(y);
            let newton = y - resid / slope;
            y = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        y
    }

    /// Radial CDF `F(r) = mu({|z| <= r})`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r < 0.0 || r.is_nan() {
            return 0.0;
        }
        if r > self.r_outer {
            return 1.0;
        }
        if self.gamma > 1.0 && r <= self.r_inner {
            return self.atom0;
        }
        let (t_lo, t_hi) = self.t_range();
        let y = self.invert_bracketed_or_edge((r * r).clamp(t_lo, t_hi));
        (y / self.gamma).clamp(0.0, 1.0)
    }

    fn invert_bracketed_or_edge(&self, t: f64) -> f64 {
        let (t_lo, t_hi) = self.t_range();
        if t <= t_lo {
            self.y_lo
        } else if t >= t_hi {
            self.y_hi
        } else {
            self.invert_bracketed(t)
        }
    }

    /// Density of the limit law with respect to Lebesgue measure on the plane,
    /// as a function of `|z|`.
    pub fn density(&self, z_abs: f64) -> Result<f64> {
        if !(z_abs > 0.0 && z_abs.is_finite()) {
            return Err(Error::invalid("|z|", z_abs, "must be positive and finite"));
        }
        if !(z_abs > self.r_inner && z_abs < self.r_outer) {
            return Ok(0.0);
        }
        if self.gamma == 1.0 && z_abs < DENSITY_FLOOR {
            return Err(Error::UnboundedDensity {
                radius: z_abs,
                floor: DENSITY_FLOOR,
            });
        }
        let y = self.invert_bracketed_or_edge(z_abs * z_abs);
        Ok(1.0 / (self.gamma * PI * self.g_prime(y)))
    }

    /// Generalized inverse of [`cdf`](Self::cdf).
    pub fn quantile(&self, u: f64) -> f64 {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        if self.gamma > 1.0 && u <= self.atom0 {
            return 0.0;
        }
        let y = (self.gamma * u).clamp(self.y_lo, self.y_hi);
        self.g_raw(y).sqrt()
    }

    /// `count` i.i.d. draws `r e^{i theta}` with `r` from [`quantile`](Self::quantile).
    pub fn sample(&self, count: usize, seed: u64) -> Result<SpectralSample> {
        if count == 0 {
            return Err(Error::invalid("count", count, "must be positive"));
        }
        let mut rng = rng::stream(seed, Domain::LsdSample, 0);
        let points = (0..count)
            .map(|_| {
                let r = self.quantile(rng.random::<f64>());
                c64::from_polar(r, TAU * rng.random::<f64>())
            })
            .collect();
        Ok(SpectralSample::new(points, SpectrumKind::Eigenvalues, count, 0).with_seed(seed))
    }

    /// Deterministic `count`-point quantization of the law: radii at the
    /// mid-quantiles `(k + 1/2)/count`, angles advancing by the golden angle.
    pub fn stratified(&self, count: usize) -> Result<SpectralSample> {
        if count == 0 {
            return Err(Error::invalid("count", count, "must be positive"));
        }
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let m = count as f64;
        let points = (0..count)
            .map(|k| {
                let r = self.quantile((k as f64 + 0.5) / m);
                c64::from_polar(r, TAU * (k as f64 * golden).fract())
            })
            .collect();
        Ok(SpectralSample::new(points, SpectrumKind::Eigenvalues, count, 0))
    }
}

pub fn g_forward(y: f64, model: &LsdModel) -> Result<f64> {
    model.g(y)
}

pub fn g_inverse(t: f64, model: &LsdModel) -> Result<f64> {
    model.g_inverse(t)
}

pub fn lsd_cdf(r: f64, model: &LsdModel) -> f64 {
    model.cdf(r)
}

pub fn lsd_density(z_abs: f64, model: &LsdModel) -> Result<f64> {
    model.density(z_abs)
}

pub fn lsd_quantile(u: f64, model: &LsdModel) -> f64 {
    model.quantile(u)
}

pub fn sample_lsd(model: &LsdModel, count: usize, seed: u64) -> Result<SpectralSample> {
    model.sample(count, seed)
}

/// Cube-root closed form of `g^{-1}` for `gamma = 1`, `0 <= t <= 2`.
/// Kept as an independent cross-check of the bracketed inversion.
pub fn g_inverse_gamma_one(t: f64) -> f64 {
    let s = (1.0 - t / 27.0).sqrt();
    0.5 * t.cbrt() * ((1.0 + s).cbrt() + (1.0 - s).cbrt())
}
