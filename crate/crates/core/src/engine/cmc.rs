//! Conventional Monte Carlo baseline: fixed-step Euler simulation with
//! Bernoulli jump arrivals and barrier checks on the time grid only.
//!
//! Within a step the diffusion increment comes first, then the jump (with
//! probability `lambda * dt`), then the barrier check at the step end.

use rand::Rng;

use super::{drive, CrossingKind, EngineResult, FptSample, RunOutcome};
use crate::error::{Error, Result};
use crate::model::{diffuse, jump_in_place, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmcConfig {
    /// Discretization step.
    pub dt: f64,
    pub n_runs: u64,
    pub seed: u64,
    pub workers: usize,
}

impl CmcConfig {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.dt > spec.horizon {
            return Err(Error::invalid(
                "dt",
                format!("exceeds the horizon {}", spec.horizon),
            ));
        }
        if spec.lambda * self.dt >= 1.0 {
            return Err(Error::invalid(
                "dt",
                format!("lambda * dt = {} must be below 1", spec.lambda * self.dt),
            ));
        }
        Ok(())
    }

    /// Number of steps covering the horizon; the last one may be shorter.
    pub fn steps(&self, horizon: f64) -> usize {
        ((horizon / self.dt - 1e-9).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct CmcEngine {
    spec: ModelSpec,
    cfg: CmcConfig,
}

impl CmcEngine {
    pub fn new(spec: ModelSpec, cfg: CmcConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate(&spec)?;
        Ok(Self { spec, cfg })
    }

    pub fn run_single<R: Rng + ?Sized>(&self, rng: &mut R) -> RunOutcome {
        simulate(&self.spec, &self.cfg, rng)
    }

    pub fn run(&self) -> Result<EngineResult> {
        let (outcomes, seconds) = drive(self.cfg.n_runs, self.cfg.seed, self.cfg.workers, |rng| {
            self.run_single(rng)
        })?;
        Ok(EngineResult::from_outcomes(
            self.spec.dim(),
            &outcomes,
            self.cfg.seed,
            seconds,
        ))
    }
}

fn simulate<R: Rng + ?Sized>(spec: &ModelSpec, cfg: &CmcConfig, rng: &mut R) -> RunOutcome {
    let m = spec.dim();
    let steps = cfg.steps(spec.horizon);
    let law = spec.jump_law();
    let mut out = RunOutcome::new(m);
    let mut state = spec.x0.clone();
    let mut noise = vec![0.0; m];
    let mut open = m;

    for k in 1..=steps {
        let (t, h) = if k == steps {
            (spec.horizon, spec.horizon - (steps - 1) as f64 * cfg.dt)
        } else {
            (k as f64 * cfg.dt, cfg.dt)
        };
        diffuse(&mut state, h, spec, &mut noise, rng);
        if spec.lambda > 0.0 && rng.random::<f64>() < spec.lambda * h {
            jump_in_place(&mut state, &law, rng);
            out.n_jumps += 1;
        }
        for (i, x) in state.iter().enumerate() {
            if out.samples[i].is_none() && *x <= spec.barrier[i].at(t) {
                out.samples[i] = Some(FptSample {
                    time: t,
                    weight: 1.0,
                    kind: CrossingKind::Grid,
                });
                open -= 1;
            }
        }
        if open == 0 {
            break;
        }
    }
    out
}

/// One baseline run. Zero diffusion rows are allowed here.
pub fn run_cmc_single<R: Rng + ?Sized>(
    spec: &ModelSpec,
    cfg: &CmcConfig,
    rng: &mut R,
) -> Result<RunOutcome> {
    spec.validate()?;
    cfg.validate(spec)?;
    Ok(simulate(spec, cfg, rng))
}

/// `cfg.n_runs` baseline runs.
pub fn run_cmc(spec: &ModelSpec, cfg: &CmcConfig) -> Result<EngineResult> {
    CmcEngine::new(spec.clone(), *cfg)?.run()
}
