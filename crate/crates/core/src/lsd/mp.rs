//! Standard Marchenko-Pastur law with ratio `c` and unit variance: density
//! `sqrt((hi - x)(x - lo)) / (2 pi c x)` on `[lo, hi] = [(1 - sqrt c)^2, (1 + sqrt c)^2]`
//! plus an atom `1 - 1/c` at zero when `c > 1`.
//!
//! With `x = (1 + c) - 2 sqrt(c) cos(phi)` the continuous part has the closed-form
//! distribution function [`MpModel::angular_cdf`], which is what the quantile
//! function inverts.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::c64;
use crate::rng::{self, Domain};
use crate::spectra::{SpectralSample, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpModel {
    ratio: f64,
    lo: f64,
    hi: f64,
}

impl MpModel {
    pub fn new(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::invalid("ratio", ratio, "must be positive and finite"));
        }
        let s = ratio.sqrt();
        Ok(Self {
            ratio,
            lo: (1.0 - s) * (1.0 - s),
            hi: (1.0 + s) * (1.0 + s),
        })
    }

    /// The reference law of `R_{0,1}` for aspect ratio `gamma`: ratio `2 gamma`.
    pub fn for_gamma(gamma: f64) -> Result<Self> {
        Self::new(2.0 * gamma)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn atom(&self) -> f64 {
        if self.ratio > 1.0 {
            1.0 - self.ratio.recip()
        } else {
            0.0
        }
    }

    /// Density of the continuous part.
    pub fn density(&self, x: f64) -> f64 {
        if !(x > self.lo && x < self.hi) || x <= 0.0 {
            return 0.0;
        }
        ((self.hi - x) * (x - self.lo)).sqrt() / (2.0 * PI * self.ratio * x)
    }

    /// Mass of the continuous part on `x(phi') <= x(phi)`, `phi` in `[0, pi]`.
    pub fn angular_cdf(&self, phi: f64) -> f64 {
        let c = self.ratio;
        let s = c.sqrt();
        let phi = phi.clamp(0.0, PI);
        let mut acc = phi.sin() / (2.0 * s) + (1.0 + c) * phi / (4.0 * c);
        let gap = (1.0 - c).abs();
        if gap > 0.0 {
            let k = (1.0 + s) / (1.0 - s).abs();
            let half = 0.5 * phi;
            acc -= gap / (2.0 * c) * (k * half.sin()).atan2(half.cos());
        }
        FRAC_2_PI * acc
    }

    fn angular_density(&self, phi: f64) -> f64 {
        let c = self.ratio;
        let denom = (1.0 + c) - 2.0 * c.sqrt() * phi.cos();
        if denom <= 0.0 {
            return 0.0;
        }
        FRAC_2_PI * phi.sin().powi(2) / denom
    }

    fn x_of(&self, phi: f64) -> f64 {
        let c = self.ratio;
        ((1.0 + c) - 2.0 * c.sqrt() * phi.cos()).clamp(self.lo, self.hi)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let atom = self.atom();
        if x <= self.lo {
            return atom;
        }
        let c = self.ratio;
        let cos_phi = ((1.0 + c - x) / (2.0 * c.sqrt())).clamp(-1.0, 1.0);
        (atom + self.angular_cdf(cos_phi.acos())).min(1.0)
    }

    /// Generalized inverse of [`cdf`](Self::cdf).
    pub fn quantile(&self, u: f64) -> f64 {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        let atom = self.atom();
        if atom > 0.0 && u <= atom {
            return 0.0;
        }
        let target = u - atom;
        let total = 1.0 - atom;
        if target >= total {
            return self.hi;
        }
        let (mut lo, mut hi) = (0.0, PI);
        let mut phi = 0.5 * PI;
        for _ in 0..200 {
            let resid = self.angular_cdf(phi) - target;
            if resid.abs() <= 1e-15 {
                break;
            }
            if resid > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            if hi - lo <= 4.0 * f64::EPSILON {
                break;
            }
            let slope = self.angular_density(phi);
            let newton = phi - resid / slope;
            phi = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        self.x_of(phi)
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<SpectralSample> {
        if count == 0 {
            return Err(Error::invalid("count", count, "must be positive"));
        }
        let mut rng = rng::stream(seed, Domain::MpSample, 0);
        let points = (0..count)
            .map(|_| c64::new(self.quantile(rng.random::<f64>()), 0.0))
            .collect();
        Ok(SpectralSample::new(points, SpectrumKind::Eigenvalues, count, 0).with_seed(seed))
    }

    /// Mid-quantile quantization `quantile((k + 1/2)/count)`, ascending.
    pub fn stratified(&self, count: usize) -> Result<SpectralSample> {
        if count == 0 {
            return Err(Error::invalid("count", count, "must be positive"));
        }
        let m = count as f64;
        let points = (0..count)
            .map(|k| c64::new(self.quantile((k as f64 + 0.5) / m), 0.0))
            .collect();
        Ok(SpectralSample::new(points, SpectrumKind::Eigenvalues, count, 0))
    }
}

pub fn mp_sample(mp: &MpModel, count: usize, seed: u64) -> Result<SpectralSample> {
    mp.sample(count, seed)
}
