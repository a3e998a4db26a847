//! Run configuration: built-in defaults, an optional JSON file, then flags.
//!
//! Each layer is an [`Overrides`] value; later layers win field by field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xjx_core::ensemble::{make_toeplitz_b1, EntryKind, EntryLaw, MaModel, MatrixShape};
use xjx_core::matrix::{identity, scaled};
use xjx_core::whiteness::{ReferenceKind, TestKind};
use xjx_core::c64;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_DIR_ENV: &str = "XJX_OUT_DIR";

pub const DEFAULT_SHAPE: (usize, usize) = (500, 1000);
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Optional settings as they appear in a config file or on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub shape: Option<[usize; 2]>,
    /// Sample count `n` used with `gamma` when no shape is given.
    pub cols: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub level: Option<f64>,
    pub test: Option<String>,
    pub alt: Option<String>,
    pub law: Option<String>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub reps: Option<usize>,
    pub reference: Option<String>,
    pub z: Option<Vec<String>>,
    pub t: Option<Vec<f64>>,
    pub grid: Option<usize>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr, $($field:ident),+) => {
        Overrides { $($field: $top.$field.or($bottom.$field)),+ }
    };
}

impl Overrides {
    /// Fields of `self` take precedence over `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        layer!(self, lower, gamma, shape, cols, seed, trials, level, test, alt, law, jobs, out, reps, reference, z, t, grid)
    }
}

pub fn load_config(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config_err = |detail: String| CliError::Config {
        path: path.to_path_buf(),
        detail,
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| config_err("top level must be a JSON object".into()))?;
    let version = object
        .remove("schema_version")
        .ok_or_else(|| config_err("missing schema_version".into()))?;
    if version.as_u64() != Some(SCHEMA_VERSION as u64) {
        return Err(config_err(format!(
            "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    serde_json::from_value(value).map_err(|e| config_err(e.to_string()))
}

/// The alternative of a ROC sweep: `y_t = w_t + B_1 w_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Alternative {
    /// The null model itself.
    White,
    /// `B_1 = alpha I` with `alpha^2 = alpha2`.
    Identity { alpha2: f64 },
    /// Toeplitz `B_1` with `tr(B_1 B_1^*)/N = trace`.
    Toeplitz { trace: f64 },
}

impl Alternative {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |why: &str| CliError::usage(format!("--alt {s:?}: {why}"));
        let s = s.trim();
        if s.eq_ignore_ascii_case("white") || s.eq_ignore_ascii_case("null") {
            return Ok(Alternative::White);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| bad("expected identity:ALPHA2, toeplitz:TRACE or white"))?;
        let value: f64 = value.trim().parse().map_err(|_| bad("value is not a number"))?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(bad("value must be positive"));
        }
        match kind.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(Alternative::Identity { alpha2: value }),
            "toeplitz" => Ok(Alternative::Toeplitz { trace: value }),
            _ => Err(bad("unknown alternative kind")),
        }
    }

    pub fn model(&self, shape: MatrixShape) -> Result<MaModel> {
        let dim = shape.rows;
        Ok(match *self {
            Alternative::White => MaModel::white(shape),
            Alternative::Identity { alpha2 } => {
                MaModel::ma1(scaled(&identity(dim), c64::new(alpha2.sqrt(), 0.0)), shape.cols)?
            }
            Alternative::Toeplitz { trace } => MaModel::ma1(make_toeplitz_b1(dim, trace)?, shape.cols)?,
        })
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<c64> {
    let bad = || CliError::usage(format!("cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| c64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent or the leading sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re: f64 = body[..k].parse().map_err(|_| bad())?;
            Ok(c64::new(re, imag(&body[k..])?))
        }
        None => Ok(c64::new(0.0, imag(body)?)),
    }
}

/// Fully resolved settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub command: String,
    pub shape: MatrixShape,
    /// Whether the shape came from `--shape`/`--gamma` rather than the default.
    #[serde(skip)]
    pub shape_explicit: bool,
    pub seed: u64,
    pub trials: Option<usize>,
    pub level: f64,
    pub test: TestKind,
    pub alt: Option<Alternative>,
    pub law: EntryKind,
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
    pub reps: usize,
    pub reference: ReferenceKind,
    pub z: Option<Vec<c64>>,
    pub t: Option<Vec<f64>>,
    pub grid: Option<usize>,
}

fn resolve_shape(o: &Overrides) -> Result<MatrixShape> {
    let shape = match (o.shape, o.gamma) {
        (Some([rows, cols]), gamma) => {
            let shape = MatrixShape::new(rows, cols)?;
            if let Some(g) = gamma {
                if (shape.gamma() - g).abs() > 1e-12 * g.max(1.0) {
                    return Err(CliError::usage(format!(
                        "--gamma {g} conflicts with --shape {rows} {cols} (ratio {})",
                        shape.gamma()
                    )));
                }
            }
            shape
        }
        (None, Some(g)) => {
            if !(g > 0.0 && g.is_finite()) {
                return Err(CliError::usage(format!("--gamma must be positive, got {g}")));
            }
            let cols = o.cols.unwrap_or(DEFAULT_SHAPE.1);
            let rows = (g * cols as f64).round() as usize;
            if rows == 0 {
                return Err(CliError::usage(format!("--gamma {g} with n = {cols} gives N = 0")));
            }
            MatrixShape::new(rows, cols)?
        }
        (None, None) => MatrixShape::new(DEFAULT_SHAPE.0, o.cols.unwrap_or(DEFAULT_SHAPE.1))?,
    };
    Ok(shape)
}

impl Settings {
    /// Validates every field; `env_out` is the output directory from the environment.
    pub fn resolve(command: &str, o: Overrides, env_out: Option<PathBuf>) -> Result<Self> {
        let shape = resolve_shape(&o)?;
        let level = o.level.unwrap_or(0.05);
        if !(level > 0.0 && level < 1.0) {
            return Err(CliError::usage(format!("--level must lie in (0, 1), got {level}")));
        }
        if let Some(t) = o.trials {
            if t == 0 {
                return Err(CliError::usage("--trials must be positive"));
            }
        }
        if o.jobs == Some(0) {
            return Err(CliError::usage("--jobs must be positive"));
        }
        if o.grid == Some(0) || o.grid == Some(1) {
            return Err(CliError::usage("--grid needs at least 2 points"));
        }
        let reps = o.reps.unwrap_or(200);
        if reps < xjx_core::whiteness::MIN_CALIBRATION_REPS {
            return Err(CliError::usage(format!("--reps must be at least 50, got {reps}")));
        }
        let test = match &o.test {
            Some(s) => s.parse().map_err(|e: xjx_core::Error| CliError::usage(e.to_string()))?,
            None => TestKind::T1,
        };
        let law = match &o.law {
            Some(s) => s.parse::<EntryKind>()?,
            None => EntryKind::default(),
        };
        let reference = match &o.reference {
            Some(s) => s.parse().map_err(|e: xjx_core::Error| CliError::usage(e.to_string()))?,
            None => ReferenceKind::default(),
        };
        let alt = o.alt.as_deref().map(Alternative::parse).transpose()?;
        let z = o
            .z
            .as_ref()
            .map(|v| v.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>())
            .transpose()?;
        if let Some(ts) = &o.t {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(CliError::usage("--t values must be positive and finite"));
            }
        }
        Ok(Self {
            command: command.to_string(),
            shape,
            shape_explicit: o.shape.is_some() || o.gamma.is_some(),
            seed: o.seed.unwrap_or(DEFAULT_SEED),
            trials: o.trials,
            level,
            test,
            alt,
            law,
            jobs: o.jobs,
            out: o.out.or(env_out).unwrap_or_else(|| PathBuf::from(".")),
            reps,
            reference,
            z,
            t: o.t,
            grid: o.grid,
        })
    }

    pub fn entry_law(&self) -> Result<EntryLaw> {
        Ok(EntryLaw::new(self.law, self.shape.cols)?)
    }

    /// SHA-256 of the canonical JSON form; output paths and job counts are excluded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("settings serialize");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let cases = [
            ("1", c64::new(1.0, 0.0)),
            ("2i", c64::new(0.0, 2.0)),
            ("1+0.5i", c64::new(1.0, 0.5)),
            ("-0.3-2i", c64::new(-0.3, -2.0)),
            ("i", c64::new(0.0, 1.0)),
            ("-i", c64::new(0.0, -1.0)),
            ("1e-3+2e+1i", c64::new(1e-3, 20.0)),
            (" 3 - i ", c64::new(3.0, -1.0)),
        ];
        for (s, z) in cases {
            assert_eq!(parse_complex(s).unwrap(), z, "{s}");
        }
        for s in ["", "x", "1+", "1+2", "ii"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
    }

    #[test]
    fn alternatives() {
        assert_eq!(Alternative::parse("identity:0.01").unwrap(), Alternative::Identity { alpha2: 0.01 });
        assert_eq!(Alternative::parse("toeplitz:1e-2").unwrap(), Alternative::Toeplitz { trace: 0.01 });
        assert_eq!(Alternative::parse("white").unwrap(), Alternative::White);
        assert!(Alternative::parse("identity").is_err());
        assert!(Alternative::parse("identity:-1").is_err());
        assert!(Alternative::parse("band:1").is_err());
    }

    #[test]
    fn layering_and_validation() {
        let flags = Overrides { seed: Some(1), ..Default::default() };
        let file = Overrides { seed: Some(2), level: Some(0.1), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!((merged.seed, merged.level), (Some(1), Some(0.1)));

        let s = Settings::resolve("x", Overrides { gamma: Some(2.0), cols: Some(50), ..Default::default() }, None).unwrap();
        assert_eq!((s.shape.rows, s.shape.cols), (100, 50));
        let bad = Overrides { gamma: Some(2.0), shape: Some([10, 10]), ..Default::default() };
        assert!(Settings::resolve("x", bad, None).is_err());
        assert!(Settings::resolve("x", Overrides { level: Some(1.5), ..Default::default() }, None).is_err());
        assert!(Settings::resolve("x", Overrides { reps: Some(10), ..Default::default() }, None).is_err());
        assert!(Settings::resolve("x", Overrides { law: Some("real".into()), ..Default::default() }, None).is_err());

        let env = Settings::resolve("x", Overrides::default(), Some("env-dir".into())).unwrap();
        assert_eq!(env.out, PathBuf::from("env-dir"));
        let flag = Settings::resolve("x", Overrides { out: Some("flag".into()), ..Default::default() }, Some("env".into())).unwrap();
        assert_eq!(flag.out, PathBuf::from("flag"));
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = Settings::resolve("x", Overrides { out: Some("a".into()), ..Default::default() }, None).unwrap();
        let b = Settings::resolve("x", Overrides { out: Some("b".into()), jobs: Some(3), ..Default::default() }, None).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Settings::resolve("x", Overrides { seed: Some(5), ..Default::default() }, None).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
