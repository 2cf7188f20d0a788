//! Constant-coefficient multivariate jump-diffusion
//!
//! ```text
//! dX = mu dt + sigma dW + dZ
//! ```
//!
//! with one Poisson jump clock of rate `lambda` shared by every component and
//! independent per-component jump sizes. Between jumps each component is a
//! drifted Brownian motion; the Brownian increments are shared across rows of
//! `sigma`, so components are correlated through the diffusion matrix.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine barrier `D(t) = intercept + slope * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearBarrier {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearBarrier {
    pub fn new(intercept: f64, slope: f64) -> Self {
        Self { intercept, slope }
    }

    pub fn constant(level: f64) -> Self {
        Self::new(level, 0.0)
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Free-function form of [`LinearBarrier::at`].
pub fn barrier_at(b: &LinearBarrier, t: f64) -> f64 {
    b.at(t)
}

/// Full problem definition. `sigma` is stored row-major, one `Vec` per process.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub x0: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub lambda: f64,
    pub jump_mean: Vec<f64>,
    pub jump_sd: Vec<f64>,
    pub barrier: Vec<LinearBarrier>,
    pub horizon: f64,
}

impl ModelSpec {
    /// Number of processes `m`.
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Checks dimensions, signs and the start-above-barrier condition.
    ///
    /// Zero diffusion rows pass here; [`ModelSpec::validate_diffusion`] is the
    /// extra check needed by anything that uses bridge formulas.
    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m == 0 {
            return Err(Error::invalid("x0", "at least one process is required"));
        }
        let check = |field, found| {
            if found == m {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    field,
                    expected: m,
                    found,
                })
            }
        };
        check("mu", self.mu.len())?;
        check("sigma", self.sigma.len())?;
        for row in &self.sigma {
            check("sigma", row.len())?;
        }
        check("jump_mean", self.jump_mean.len())?;
        check("jump_sd", self.jump_sd.len())?;
        check("barrier", self.barrier.len())?;

        let finite = |field: &'static str, xs: &[f64]| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::invalid(field, "all entries must be finite"))
            }
        };
        finite("x0", &self.x0)?;
        finite("mu", &self.mu)?;
        for row in &self.sigma {
            finite("sigma", row)?;
        }
        finite("jump_mean", &self.jump_mean)?;
        finite("jump_sd", &self.jump_sd)?;
        for b in &self.barrier {
            finite("barrier", &[b.intercept, b.slope])?;
        }

        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid(
                "horizon",
                "must be a positive finite number",
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                "must be a nonnegative finite number",
            ));
        }
        if let Some(i) = self.jump_sd.iter().position(|&s| s < 0.0) {
            return Err(Error::invalid(
                "jump_sd",
                format!("entry {i} is negative ({})", self.jump_sd[i]),
            ));
        }
        for (i, (x, b)) in self.x0.iter().zip(&self.barrier).enumerate() {
            let d = b.at(0.0);
            if *x <= d {
                return Err(Error::StartsBelowBarrier {
                    process: i,
                    x0: *x,
                    barrier: d,
                });
            }
        }
        Ok(())
    }

    /// Rejects diffusion rows whose effective volatility is zero.
    pub fn validate_diffusion(&self) -> Result<()> {
        for i in 0..self.sigma.len() {
            effective_sigma(&self.sigma, i)?;
        }
        Ok(())
    }

    /// The configured jump-size law.
    pub fn jump_law(&self) -> GaussianJumps<'_> {
        GaussianJumps {
            mean: &self.jump_mean,
            sd: &self.jump_sd,
        }
    }
}

/// Euclidean norm of row `i` of `sigma`: the volatility of component `i`
/// seen as a one-dimensional Brownian motion.
pub fn effective_sigma(sigma: &[Vec<f64>], i: usize) -> Result<f64> {
    let row = sigma.get(i).ok_or(Error::DimensionMismatch {
        field: "sigma",
        expected: i + 1,
        found: sigma.len(),
    })?;
    let norm = row.iter().map(|s| s * s).sum::<f64>().sqrt();
    if norm > 0.0 {
        Ok(norm)
    } else {
        Err(Error::DegenerateDiffusion { row: i })
    }
}

/// Distribution of jump sizes, one draw per component per jump.
pub trait JumpSizeLaw {
    fn sample<R: Rng + ?Sized>(&self, component: usize, rng: &mut R) -> f64;
}

/// Independent `Normal(mean[i], sd[i]^2)` jump sizes.
#[derive(Debug, Clone, Copy)]
pub struct GaussianJumps<'a> {
    pub mean: &'a [f64],
    pub sd: &'a [f64],
}

impl JumpSizeLaw for GaussianJumps<'_> {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, component: usize, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean[component] + self.sd[component] * z
    }
}

/// Jump instants of a rate-`lambda` Poisson process on the open interval
/// `(0, horizon)`, built by accumulating exponential gaps. An instant landing
/// exactly on `horizon` is dropped.
pub fn sample_jump_instants<R: Rng + ?Sized>(lambda: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut instants = Vec::new();
    if lambda <= 0.0 {
        return instants;
    }
    let gap = Exp::new(lambda).expect("lambda is positive and finite");
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t >= horizon {
            break;
        }
        instants.push(t);
    }
    instants
}

/// In-place diffusion step over `dt`. `noise` is scratch space of length `m`.
#[inline]
pub(crate) fn diffuse<R: Rng + ?Sized>(
    state: &mut [f64],
    dt: f64,
    spec: &ModelSpec,
    noise: &mut [f64],
    rng: &mut R,
) {
    let sd = dt.sqrt();
    for n in noise.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *n = sd * z;
    }
    for (i, x) in state.iter_mut().enumerate() {
        let shock: f64 = spec.sigma[i]
            .iter()
            .zip(noise.iter())
            .map(|(s, n)| s * n)
            .sum();
        *x += spec.mu[i] * dt + shock;
    }
}

/// Value just before the next jump, `dt` after `state`.
pub fn propagate_interjump<R: Rng + ?Sized>(
    state: &[f64],
    dt: f64,
    spec: &ModelSpec,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = state.to_vec();
    let mut noise = vec![0.0; state.len()];
    diffuse(&mut out, dt, spec, &mut noise, rng);
    out
}

#[inline]
pub(crate) fn jump_in_place<L: JumpSizeLaw, R: Rng + ?Sized>(
    state: &mut [f64],
    law: &L,
    rng: &mut R,
) {
    for (i, x) in state.iter_mut().enumerate() {
        *x += law.sample(i, rng);
    }
}

/// Post-jump value: every component receives an independent jump.
pub fn apply_jump<R: Rng + ?Sized>(state: &[f64], spec: &ModelSpec, rng: &mut R) -> Vec<f64> {
    let mut out = state.to_vec();
    jump_in_place(&mut out, &spec.jump_law(), rng);
    out
}

/// One Monte Carlo run's jump skeleton.
///
/// `instants` holds `T_0 = 0, T_1, .., T_M, T_{M+1} = horizon`. Row `i` of
/// `pre_jump` holds `X_i(T_j-)` for `j = 1..=M+1` and row `i` of `post_jump`
/// holds `X_i(T_j+)` for `j = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTimeline {
    pub instants: Vec<f64>,
    pub initial: Vec<f64>,
    pub pre_jump: Vec<Vec<f64>>,
    pub post_jump: Vec<Vec<f64>>,
}

impl JumpTimeline {
    pub fn n_jumps(&self) -> usize {
        self.instants.len() - 2
    }

    pub fn n_segments(&self) -> usize {
        self.instants.len() - 1
    }

    /// Value of component `i` at the start of segment `k` (0-based), i.e.
    /// just after the `k`-th jump.
    pub fn segment_start(&self, i: usize, k: usize) -> f64 {
        if k == 0 {
            self.initial[i]
        } else {
            self.post_jump[i][k - 1]
        }
    }

    /// Value of component `i` at the end of segment `k`, before any jump.
    pub fn segment_end(&self, i: usize, k: usize) -> f64 {
        self.pre_jump[i][k]
    }
}

/// Builds a timeline with the model's own jump law.
pub fn build_timeline<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> JumpTimeline {
    build_timeline_with(spec, &spec.jump_law(), rng)
}

/// Builds a timeline with an arbitrary jump-size law.
pub fn build_timeline_with<L: JumpSizeLaw, R: Rng + ?Sized>(
    spec: &ModelSpec,
    law: &L,
    rng: &mut R,
) -> JumpTimeline {
    let m = spec.dim();
    let jumps = sample_jump_instants(spec.lambda, spec.horizon, rng);
    let n = jumps.len();

    let mut instants = Vec::with_capacity(n + 2);
    instants.push(0.0);
    instants.extend_from_slice(&jumps);
    instants.push(spec.horizon);

    let mut pre_jump = vec![Vec::with_capacity(n + 1); m];
    let mut post_jump = vec![Vec::with_capacity(n); m];
    let mut state = spec.x0.clone();
    let mut noise = vec![0.0; m];
    for k in 0..=n {
        diffuse(
            &mut state,
            instants[k + 1] - instants[k],
            spec,
            &mut noise,
            rng,
        );
        for (row, x) in pre_jump.iter_mut().zip(&state) {
            row.push(*x);
        }
        if k < n {
            jump_in_place(&mut state, law, rng);
            for (row, x) in post_jump.iter_mut().zip(&state) {
                row.push(*x);
            }
        }
    }

    JumpTimeline {
        instants,
        initial: spec.x0.clone(),
        pre_jump,
        post_jump,
    }
}
