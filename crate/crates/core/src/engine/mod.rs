//! Monte Carlo engines and the pieces they share: per-run outcomes, the
//! deterministic parallel driver, and density estimation from engine output.

pub mod cmc;
pub mod unif;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::kde::{self, DensityEstimate, WeightedSamples};

pub use cmc::{run_cmc, run_cmc_single, CmcConfig, CmcEngine};
pub use unif::{run_engine, run_single, UnifEngine};

/// How a crossing was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingKind {
    /// Inside an interjump interval, from the bridge sampler.
    Interior,
    /// At a jump instant.
    AtJump,
    /// On a monitoring grid point of the discretized baseline.
    Grid,
}

/// A recorded first passage of one process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FptSample {
    pub time: f64,
    pub weight: f64,
    pub kind: CrossingKind,
}

/// Result of one Monte Carlo run. `samples[i]` is `Some` once process `i`
/// has crossed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Position of the run within its batch; also its random stream.
    pub run_index: u64,
    pub samples: Vec<Option<FptSample>>,
    /// Jumps realized during the run.
    pub n_jumps: usize,
    /// Segments entered with the start value already at or below the level.
    pub grazing: usize,
}

impl RunOutcome {
    pub(crate) fn new(m: usize) -> Self {
        Self {
            run_index: 0,
            samples: vec![None; m],
            n_jumps: 0,
            grazing: 0,
        }
    }

    pub fn all_crossed(&self) -> bool {
        self.samples.iter().all(Option::is_some)
    }
}

/// Accumulated output of an engine execution.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineResult {
    /// One set of crossing samples per process.
    pub marginals: Vec<WeightedSamples>,
    /// Crossing-time tuples of runs in which every process crossed, weighted
    /// by the product of the per-process weights.
    pub joint: WeightedSamples,
    pub n_runs: u64,
    /// Wall-clock time of the run loop divided by `n_runs`.
    pub seconds_per_run: f64,
    pub seed: u64,
    pub total_jumps: u64,
    pub grazing_events: u64,
}

impl EngineResult {
    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    /// Estimated crossing probability of each process over the horizon.
    pub fn crossing_probabilities(&self) -> Vec<f64> {
        self.marginals
            .iter()
            .map(WeightedSamples::weighted_fraction)
            .collect()
    }

    pub(crate) fn from_outcomes(
        m: usize,
        outcomes: &[RunOutcome],
        seed: u64,
        seconds: f64,
    ) -> Self {
        let n_runs = outcomes.len() as u64;
        let mut marginals: Vec<WeightedSamples> =
            (0..m).map(|_| WeightedSamples::new(1, n_runs)).collect();
        let mut joint = WeightedSamples::new(m, n_runs);
        let mut tuple = vec![0.0; m];
        let mut total_jumps = 0;
        let mut grazing_events = 0;
        for run in outcomes {
            total_jumps += run.n_jumps as u64;
            grazing_events += run.grazing as u64;
            let mut product = 1.0;
            let mut complete = true;
            for (i, sample) in run.samples.iter().enumerate() {
                match sample {
                    Some(s) => {
                        marginals[i].push(&[s.time], s.weight);
                        tuple[i] = s.time;
                        product *= s.weight;
                    }
                    None => complete = false,
                }
            }
            if complete {
                joint.push(&tuple, product);
            }
        }
        Self {
            marginals,
            joint,
            n_runs,
            seconds_per_run: seconds / n_runs as f64,
            seed,
            total_jumps,
            grazing_events,
        }
    }
}

/// Runs `n_runs` independent replications of `run` on `workers` threads.
///
/// Run `k` draws from ChaCha8 stream `k` of the generator seeded with
/// `seed`, and outcomes are collected in run order, so the output does not
/// depend on the worker count or on scheduling. Returns the outcomes and the
/// elapsed wall time of the loop.
pub fn drive<F>(n_runs: u64, seed: u64, workers: usize, run: F) -> Result<(Vec<RunOutcome>, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> RunOutcome + Sync,
{
    if n_runs == 0 {
        return Err(Error::invalid("n_runs", "must be at least 1"));
    }
    if workers == 0 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let one = |k: u64| {
        let mut rng = base.clone();
        rng.set_stream(k);
        let mut out = run(&mut rng);
        out.run_index = k;
        out
    };
    let start = Instant::now();
    let outcomes = if workers == 1 {
        (0..n_runs).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(|| (0..n_runs).into_par_iter().map(one).collect())
    };
    Ok((outcomes, start.elapsed().as_secs_f64()))
}

/// Grid resolution for density estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityGrid {
    pub horizon: f64,
    /// Points on `[0, horizon]` for marginal densities.
    pub points_1d: usize,
    /// Points per axis for the joint density.
    pub points_joint: usize,
}

impl DensityGrid {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            points_1d: 512,
            points_joint: 128,
        }
    }

    /// Bandwidth used when a sample is too small to fit.
    pub fn fallback_bandwidth(&self) -> f64 {
        0.01 * self.horizon
    }
}

/// Marginal and joint density estimates of one engine result.
#[derive(Debug, Clone, PartialEq)]
pub struct Densities {
    pub marginals: Vec<DensityEstimate>,
    /// Present for two or more processes.
    pub joint: Option<DensityEstimate>,
}

/// Turns engine samples into densities: gamma-reference bandwidths on the
/// unweighted crossing times for each marginal, the normal-reference
/// bandwidth for the joint density.
pub fn estimate_densities(result: &EngineResult, grid: &DensityGrid) -> Result<Densities> {
    let axis = kde::uniform_grid(0.0, grid.horizon, grid.points_1d);
    let fallback = grid.fallback_bandwidth();
    let marginals = result
        .marginals
        .iter()
        .map(|s| {
            let h = kde::gamma_reference_bandwidth(s.coords(), fallback);
            kde::estimate_density_1d(s, &axis, h)
        })
        .collect::<Result<Vec<_>>>()?;

    let joint = if result.dim() >= 2 {
        let axis = kde::uniform_grid(0.0, grid.horizon, grid.points_joint);
        let axes = vec![axis; result.dim()];
        let est = if result.joint.is_empty() {
            DensityEstimate::zero(axes, fallback)
        } else {
            let h = kde::optimal_bandwidth_multi(result.dim(), result.joint.len());
            kde::estimate_density_multi(&result.joint, &axes, h)?
        };
        Some(est)
    } else {
        None
    };
    Ok(Densities { marginals, joint })
}

/// `int |a - b| / int |b|` for two densities on the same grid.
pub fn normalized_l1(a: &DensityEstimate, b: &DensityEstimate) -> f64 {
    assert_eq!(a.axes, b.axes, "densities must share a grid");
    let diff: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| (p - q).abs())
        .collect();
    let norm: Vec<f64> = b.values.iter().map(|q| q.abs()).collect();
    kde::tensor_trapezoid(&a.axes, &diff) / kde::tensor_trapezoid(&b.axes, &norm)
}
