//! Experiment configuration files.
//!
//! A configuration is a flat TOML document: scalars and arrays of numbers,
//! with `sigma` as an array of rows. The grammar and every key are
//! documented in `docs/config.md`; [`ExperimentConfig::to_toml`] writes the
//! same format back.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{CmcConfig, DensityGrid};
use crate::error::Error;
use crate::model::{LinearBarrier, ModelSpec};

/// Which engines an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Unif,
    Cmc,
    Both,
}

impl EngineChoice {
    pub fn runs_unif(self) -> bool {
        matches!(self, Self::Unif | Self::Both)
    }

    pub fn runs_cmc(self) -> bool {
        matches!(self, Self::Cmc | Self::Both)
    }
}

impl FromStr for EngineChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unif" => Ok(Self::Unif),
            "cmc" => Ok(Self::Cmc),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "unknown engine `{other}` (expected unif, cmc or both)"
            )),
        }
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unif => "unif",
            Self::Cmc => "cmc",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("missing required key `{0}`")]
    MissingField(&'static str),

    #[error("dimension mismatch at `{key}`: expected {expected} entries, found {found}")]
    DimensionMismatch {
        key: String,
        expected: usize,
        found: usize,
    },

    #[error("x0[{process}] = {x0} is not above its barrier level {barrier} at t = 0")]
    StartsBelowBarrier {
        process: usize,
        x0: f64,
        barrier: f64,
    },

    #[error("degenerate diffusion row: sigma[{row}] is all zeros")]
    DegenerateDiffusion { row: usize },

    #[error("lambda * dt = {} must be below 1 (lambda = {lambda}, dt = {dt})", lambda * dt)]
    JumpStepTooLarge { lambda: f64, dt: f64 },

    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key,
            reason: reason.into(),
        }
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch {
                field,
                expected,
                found,
            } => Self::DimensionMismatch {
                key: field.to_string(),
                expected,
                found,
            },
            Error::DegenerateDiffusion { row } => Self::DegenerateDiffusion { row },
            Error::StartsBelowBarrier {
                process,
                x0,
                barrier,
            } => Self::StartsBelowBarrier {
                process,
                x0,
                barrier,
            },
            Error::InvalidParameter { field, reason } => Self::Invalid { key: field, reason },
            other => Self::Invalid {
                key: "model",
                reason: other.to_string(),
            },
        }
    }
}

/// On-disk layout. Every key is optional here so that absent keys produce
/// a dedicated diagnostic instead of a generic decoding error.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    m: Option<usize>,
    horizon: Option<f64>,
    x0: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
    sigma: Option<Vec<Vec<f64>>>,
    lambda: Option<f64>,
    jump_mean: Option<Vec<f64>>,
    jump_sd: Option<Vec<f64>>,
    barrier_intercept: Option<Vec<f64>>,
    barrier_slope: Option<Vec<f64>>,
    engine: Option<EngineChoice>,
    runs: Option<u64>,
    dt: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    grid_1d: Option<usize>,
    grid_2d: Option<usize>,
    out: Option<PathBuf>,
}

/// A validated experiment: model, engine selection and run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ModelSpec,
    pub engine: EngineChoice,
    pub runs: u64,
    /// CMC step; required whenever the CMC engine runs.
    pub dt: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    /// Grid points on `[0, horizon]` for marginal densities.
    pub grid_1d: usize,
    /// Grid points per axis for the joint density.
    pub grid_2d: usize,
    pub out: PathBuf,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub engine: Option<EngineChoice>,
    pub runs: Option<u64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_GRID_1D: usize = 512;
pub const DEFAULT_GRID_2D: usize = 128;
pub const DEFAULT_OUT: &str = "out";

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse()
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        Self::from_raw(raw)
    }
}

fn required<T>(value: Option<T>, key: &'static str) -> Result<T, ConfigError> {
    value.ok_or(ConfigError::MissingField(key))
}

fn check_len(key: &str, expected: usize, found: usize) -> Result<(), ConfigError> {
    if expected == found {
        Ok(())
    } else {
        Err(ConfigError::DimensionMismatch {
            key: key.to_string(),
            expected,
            found,
        })
    }
}

impl ExperimentConfig {
    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let m = required(raw.m, "m")?;
        let x0 = required(raw.x0, "x0")?;
        let mu = required(raw.mu, "mu")?;
        let sigma = required(raw.sigma, "sigma")?;
        let jump_mean = required(raw.jump_mean, "jump_mean")?;
        let jump_sd = required(raw.jump_sd, "jump_sd")?;
        let intercept = required(raw.barrier_intercept, "barrier_intercept")?;
        let slope = raw
            .barrier_slope
            .unwrap_or_else(|| vec![0.0; intercept.len()]);

        check_len("x0", m, x0.len())?;
        check_len("mu", m, mu.len())?;
        check_len("sigma", m, sigma.len())?;
        for (i, row) in sigma.iter().enumerate() {
            check_len(&format!("sigma[{i}]"), m, row.len())?;
        }
        check_len("jump_mean", m, jump_mean.len())?;
        check_len("jump_sd", m, jump_sd.len())?;
        check_len("barrier_intercept", m, intercept.len())?;
        check_len("barrier_slope", m, slope.len())?;

        let spec = ModelSpec {
            x0,
            mu,
            sigma,
            lambda: required(raw.lambda, "lambda")?,
            jump_mean,
            jump_sd,
            barrier: intercept
                .iter()
                .zip(&slope)
                .map(|(&a, &b)| LinearBarrier::new(a, b))
                .collect(),
            horizon: required(raw.horizon, "horizon")?,
        };
        let cfg = Self {
            spec,
            engine: required(raw.engine, "engine")?,
            runs: required(raw.runs, "runs")?,
            dt: raw.dt,
            seed: required(raw.seed, "seed")?,
            workers: raw.workers.unwrap_or(1),
            grid_1d: raw.grid_1d.unwrap_or(DEFAULT_GRID_1D),
            grid_2d: raw.grid_2d.unwrap_or(DEFAULT_GRID_2D),
            out: raw.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every invariant; called by the parser and after overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spec.validate()?;
        self.spec.validate_diffusion()?;
        if self.runs == 0 {
            return Err(ConfigError::invalid("runs", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(ConfigError::invalid("workers", "must be at least 1"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::invalid(
                "seed",
                format!("must not exceed {}", i64::MAX),
            ));
        }
        if self.grid_1d < 2 {
            return Err(ConfigError::invalid("grid_1d", "needs at least 2 points"));
        }
        if self.grid_2d < 2 {
            return Err(ConfigError::invalid("grid_2d", "needs at least 2 points"));
        }
        match self.dt {
            None if self.engine.runs_cmc() => return Err(ConfigError::MissingField("dt")),
            None => {}
            Some(dt) => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(ConfigError::invalid(
                        "dt",
                        "must be a positive finite number",
                    ));
                }
                if dt > self.spec.horizon {
                    return Err(ConfigError::invalid(
                        "dt",
                        format!("exceeds the horizon {}", self.spec.horizon),
                    ));
                }
                if self.spec.lambda * dt >= 1.0 {
                    return Err(ConfigError::JumpStepTooLarge {
                        lambda: self.spec.lambda,
                        dt,
                    });
                }
            }
        }
        Ok(())
    }

    /// Applies command-line overrides and revalidates.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(e) = o.engine {
            self.engine = e;
        }
        if let Some(n) = o.runs {
            self.runs = n;
        }
        if o.dt.is_some() {
            self.dt = o.dt;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        self.validate()
    }

    /// Baseline settings, present when a step is configured.
    pub fn cmc_config(&self) -> Option<CmcConfig> {
        self.dt.map(|dt| CmcConfig {
            dt,
            n_runs: self.runs,
            seed: self.seed,
            workers: self.workers,
        })
    }

    pub fn density_grid(&self) -> DensityGrid {
        DensityGrid {
            horizon: self.spec.horizon,
            points_1d: self.grid_1d,
            points_joint: self.grid_2d,
        }
    }

    /// Serializes to the file format; parsing the output gives back `self`.
    pub fn to_toml(&self) -> String {
        let s = &self.spec;
        let raw = RawConfig {
            m: Some(s.dim()),
            horizon: Some(s.horizon),
            x0: Some(s.x0.clone()),
            mu: Some(s.mu.clone()),
            sigma: Some(s.sigma.clone()),
            lambda: Some(s.lambda),
            jump_mean: Some(s.jump_mean.clone()),
            jump_sd: Some(s.jump_sd.clone()),
            barrier_intercept: Some(s.barrier.iter().map(|b| b.intercept).collect()),
            barrier_slope: Some(s.barrier.iter().map(|b| b.slope).collect()),
            engine: Some(self.engine),
            runs: Some(self.runs),
            dt: self.dt,
            seed: Some(self.seed),
            workers: Some(self.workers),
            grid_1d: Some(self.grid_1d),
            grid_2d: Some(self.grid_2d),
            out: Some(self.out.clone()),
        };
        toml::to_string(&raw).expect("validated configs are representable")
    }
}
