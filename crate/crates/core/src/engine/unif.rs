//! Uniform-sampling engine.
//!
//! Each run simulates only the jump skeleton: the process values just
//! before and just after every jump. Every interjump interval is then a
//! Brownian bridge, and for each process that has not crossed yet the scan
//! asks, in time order:
//!
//! 1. did the bridge cross inside the interval? (uniform proposal with
//!    importance weight, see [`sample_crossing`]);
//! 2. if not, the interval is survived;
//! 3. did the jump closing the interval take the process across? (crossing
//!    at the jump instant, weight 1).
//!
//! A process is never examined again after its first crossing.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{drive, CrossingKind, EngineResult, FptSample, RunOutcome};
use crate::bridge::{sample_crossing, segment_level, BridgeSegment};
use crate::error::Result;
use crate::model::{diffuse, effective_sigma, jump_in_place, JumpTimeline, ModelSpec};

/// A validated model with its per-process effective volatilities.
#[derive(Debug, Clone)]
pub struct UnifEngine {
    spec: ModelSpec,
    sigma: Vec<f64>,
}

impl UnifEngine {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let sigma = (0..spec.dim())
            .map(|i| effective_sigma(&spec.sigma, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, sigma })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// One run. The skeleton is generated one interjump segment at a time
    /// and generation stops once every process has crossed, so jumps after
    /// the last crossing are never simulated.
    pub fn run_single<R: Rng + ?Sized>(&self, rng: &mut R) -> RunOutcome {
        let spec = &self.spec;
        let m = spec.dim();
        let mut out = RunOutcome::new(m);
        let mut buf = vec![0.0; 4 * m];
        let (cur, rest) = buf.split_at_mut(m);
        let (end, rest) = rest.split_at_mut(m);
        let (post, noise) = rest.split_at_mut(m);
        cur.copy_from_slice(&spec.x0);

        let gap = (spec.lambda > 0.0)
            .then(|| Exp::new(spec.lambda).expect("lambda is positive and finite"));
        let law = spec.jump_law();
        let mut open = m;
        let mut t0 = 0.0;
        loop {
            let t_jump = gap.as_ref().map_or(f64::INFINITY, |g| t0 + g.sample(rng));
            let jump = t_jump < spec.horizon;
            let t1 = if jump { t_jump } else { spec.horizon };
            end.copy_from_slice(cur);
            diffuse(end, t1 - t0, spec, noise, rng);
            if jump {
                post.copy_from_slice(end);
                jump_in_place(post, &law, rng);
                out.n_jumps += 1;
            }
            open -= self.visit_segment(t0, t1, cur, end, jump.then_some(&*post), &mut out, rng);
            if !jump || open == 0 {
                break;
            }
            cur.copy_from_slice(post);
            t0 = t1;
        }
        out
    }

    /// Scans a complete skeleton for first passages.
    pub fn scan_timeline<R: Rng + ?Sized>(&self, tl: &JumpTimeline, rng: &mut R) -> RunOutcome {
        let m = self.spec.dim();
        let jumps = tl.n_jumps();
        let mut out = RunOutcome::new(m);
        out.n_jumps = jumps;
        let mut open = m;
        let mut start = vec![0.0; m];
        let mut end = vec![0.0; m];
        let mut post = vec![0.0; m];
        for k in 0..tl.n_segments() {
            for i in 0..m {
                start[i] = tl.segment_start(i, k);
                end[i] = tl.segment_end(i, k);
                if k < jumps {
                    post[i] = tl.post_jump[i][k];
                }
            }
            let (t0, t1) = (tl.instants[k], tl.instants[k + 1]);
            let post = (k < jumps).then_some(post.as_slice());
            open -= self.visit_segment(t0, t1, &start, &end, post, &mut out, rng);
            if open == 0 {
                break;
            }
        }
        out
    }

    /// Checks every process that has not crossed yet against one segment
    /// running from `start` at `t0` to `end` at `t1`, followed by a jump to
    /// `post` if there is one. Returns the number of new crossings.
    #[allow(clippy::too_many_arguments)]
    fn visit_segment<R: Rng + ?Sized>(
        &self,
        t0: f64,
        t1: f64,
        start: &[f64],
        end: &[f64],
        post: Option<&[f64]>,
        out: &mut RunOutcome,
        rng: &mut R,
    ) -> usize {
        let mut crossed = 0;
        for i in 0..start.len() {
            if out.samples[i].is_some() {
                continue;
            }
            let barrier = &self.spec.barrier[i];
            let level = segment_level(barrier, t0, t1);

            let sample = if start[i] <= level {
                // Start value already at the level (floating-point grazing
                // of the midpoint level); record at the interval start.
                out.grazing += 1;
                Some(FptSample {
                    time: t0,
                    weight: 1.0,
                    kind: CrossingKind::AtJump,
                })
            } else {
                let seg = BridgeSegment {
                    x_start: start[i],
                    x_end: end[i],
                    t_start: t0,
                    t_end: t1,
                    mu: self.spec.mu[i],
                    sigma: self.sigma[i],
                    level,
                };
                match sample_crossing(&seg, rng) {
                    Some(d) => Some(FptSample {
                        time: d.s,
                        weight: d.weight,
                        kind: CrossingKind::Interior,
                    }),
                    None if post.is_some_and(|p| p[i] <= barrier.at(t1)) => Some(FptSample {
                        time: t1,
                        weight: 1.0,
                        kind: CrossingKind::AtJump,
                    }),
                    None => None,
                }
            };
            if sample.is_some() {
                out.samples[i] = sample;
                crossed += 1;
            }
        }
        crossed
    }

    /// `n_runs` replications; see [`drive`] for the determinism contract.
    pub fn run(&self, n_runs: u64, seed: u64, workers: usize) -> Result<EngineResult> {
        let (outcomes, seconds) = drive(n_runs, seed, workers, |rng| self.run_single(rng))?;
        Ok(EngineResult::from_outcomes(
            self.spec.dim(),
            &outcomes,
            seed,
            seconds,
        ))
    }
}

/// One run of the uniform-sampling method.
pub fn run_single<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<RunOutcome> {
    Ok(UnifEngine::new(spec.clone())?.run_single(rng))
}

/// `n_runs` runs of the uniform-sampling method.
pub fn run_engine(
    spec: &ModelSpec,
    n_runs: u64,
    seed: u64,
    workers: usize,
) -> Result<EngineResult> {
    UnifEngine::new(spec.clone())?.run(n_runs, seed, workers)
}
