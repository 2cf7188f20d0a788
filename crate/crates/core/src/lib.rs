//! First-passage-time Monte Carlo for multivariate jump-diffusion processes.
//!
//! The crate simulates `m` correlated jump-diffusions
//! `dX = mu dt + sigma dW + dZ` against per-process affine barriers and
//! estimates the density of each process's first passage time, plus their
//! joint density.
//!
//! Two engines are provided:
//!
//! * [`engine::unif`]: the fast uniform-sampling method. Only the jump
//!   skeleton is simulated; crossings between jumps come from exact
//!   Brownian-bridge formulas ([`bridge`]) and carry importance weights.
//! * [`engine::cmc`]: a conventional fixed-step Euler baseline.
//!
//! Densities are produced with Gaussian kernels ([`kde`]), and the
//! [`config`] and [`report`] modules drive complete experiments from a
//! TOML file for the `fptmc` command-line tool.

pub mod bridge;
pub mod config;
pub mod engine;
pub mod error;
pub mod kde;
pub mod model;
pub mod report;

pub use error::{Error, Result};
pub use model::{LinearBarrier, ModelSpec};
