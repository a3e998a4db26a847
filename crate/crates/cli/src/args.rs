//! Command-line grammar and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::commands::{self, Outcome};
use crate::config::{load_config, Overrides, Settings, OUT_DIR_ENV};
use crate::error::{CliError, Result};
use crate::io::{write_json, Meta};
use crate::verify::{self, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "xjx", version, about = "Spectra of X J X* and whiteness tests for high-dimensional series")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Flags override the config file, which
/// overrides the environment.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file with `schema_version: 1`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (also `XJX_OUT_DIR`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Aspect ratio N/n; combined with --cols (default 1000).
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Dimension N and sample count n.
    #[arg(long, global = true, num_args = 2, value_names = ["N", "n"])]
    pub shape: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub cols: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub level: Option<f64>,
    /// t1, t2 or t3.
    #[arg(long, global = true)]
    pub test: Option<String>,
    /// identity:ALPHA2, toeplitz:TRACE or white.
    #[arg(long, global = true)]
    pub alt: Option<String>,
    /// Entry law: complex-gaussian, complex-bernoulli-phase or uniform-phase-disc.
    #[arg(long, global = true)]
    pub law: Option<String>,
    /// Null calibration replicates.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// stratified or random reference samples.
    #[arg(long, global = true)]
    pub reference: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of one draw and the limiting support.
    Scatter,
    /// Empirical and limiting radial CDF.
    Cdf {
        /// Number of radii on the grid.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Whiteness test on an observed N x n series (CSV of re,im pairs).
    Test { input: PathBuf },
    /// ROC curves of all three tests under an alternative.
    Roc,
    /// Solutions of the master equations along a t path.
    Master {
        /// Spectral parameter, e.g. `1+0.5i`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
        /// Values of t; repeatable.
        #[arg(long)]
        t: Vec<f64>,
    },
    /// Smallest singular value of X J X* - z over repeated draws.
    Smin {
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Run the acceptance checks.
    Verify {
        /// Set every tolerance to zero.
        #[arg(long)]
        force_fail: bool,
        /// Run only these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Cdf { .. } => "cdf",
            Command::Test { .. } => "test",
            Command::Roc => "roc",
            Command::Master { .. } => "master",
            Command::Smin { .. } => "smin",
            Command::Verify { .. } => "verify",
        }
    }
}

impl Cli {
    fn overrides(&self) -> Result<Overrides> {
        let g = &self.global;
        let shape = match &g.shape {
            Some(v) => Some([v[0], v[1]]),
            None => None,
        };
        let mut o = Overrides {
            gamma: g.gamma,
            shape,
            cols: g.cols,
            seed: g.seed,
            trials: g.trials,
            level: g.level,
            test: g.test.clone(),
            alt: g.alt.clone(),
            law: g.law.clone(),
            jobs: g.jobs,
            out: g.out.clone(),
            reps: g.reps,
            reference: g.reference.clone(),
            ..Overrides::default()
        };
        match &self.command {
            Command::Cdf { grid } => o.grid = *grid,
            Command::Master { z, t } => {
                if !z.is_empty() {
                    o.z = Some(z.clone());
                }
                if !t.is_empty() {
                    o.t = Some(t.clone());
                }
            }
            Command::Smin { z } => o.z = z.clone().map(|z| vec![z]),
            _ => {}
        }
        if let Some(path) = &g.config {
            o = o.over(load_config(path)?);
        }
        Ok(o)
    }

    /// Resolves flags, config file and environment into settings.
    pub fn settings(&self) -> Result<Settings> {
        let env_out = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        Settings::resolve(self.command.name(), self.overrides()?, env_out)
    }
}

/// Executes the parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let settings = cli.settings()?;
    std::fs::create_dir_all(&settings.out).map_err(|e| CliError::io(&settings.out, e))?;
    let jobs = settings.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| dispatch(&cli.command, &settings))
}

fn dispatch(command: &Command, settings: &Settings) -> Result<Outcome> {
    match command {
        Command::Scatter => commands::cmd_scatter(settings),
        Command::Cdf { .. } => commands::cmd_cdf(settings),
        Command::Test { input } => commands::cmd_test(settings, input),
        Command::Roc => commands::cmd_roc(settings),
        Command::Master { .. } => commands::cmd_master(settings),
        Command::Smin { .. } => commands::cmd_smin(settings),
        Command::Verify { force_fail, only } => run_verify(settings, *force_fail, only),
    }
}

fn run_verify(settings: &Settings, force_fail: bool, only: &[usize]) -> Result<Outcome> {
    let known: Vec<usize> = verify::criterion_ids().iter().map(|(id, _)| *id).collect();
    if let Some(bad) = only.iter().find(|id| !known.contains(id)) {
        return Err(CliError::usage(format!("--only: no criterion {bad}")));
    }
    let report = verify::run(VerifyOptions { force_fail }, only, |c| println!("{}", c.line()));
    let meta = Meta::of(settings);
    let path = write_json(&settings.out.join("verify.json"), &meta, &report)?;
    let failed: Vec<usize> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    if !failed.is_empty() {
        return Err(CliError::Acceptance(format!("criteria {failed:?} failed; see {}", path.display())));
    }
    Ok(Outcome {
        files: vec![path],
        summary: json!({ "passed": report.criteria.len() }),
    })
}
