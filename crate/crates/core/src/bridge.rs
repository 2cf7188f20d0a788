//! Brownian-bridge crossing mathematics on a single interjump interval.
//!
//! Between two jumps a component is a drifted Brownian motion whose two
//! endpoint values are already known, so the path in between is a Brownian
//! bridge. The functions here give the probability that the bridge stays
//! above a flat level, the density of its first crossing time, and the
//! uniform-proposal sampler that turns the two into weighted crossing draws.

use rand::Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{JumpTimeline, LinearBarrier};

/// Survival probabilities at or above `1 - SURVIVAL_EPS` are treated as
/// certain survival; the proposal width `tau / (1 - P)` would overflow.
pub const SURVIVAL_EPS: f64 = 1e-12;

/// One interjump interval of one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeSegment {
    /// Value right after the jump that opens the interval.
    pub x_start: f64,
    /// Value right before the jump that closes the interval.
    pub x_end: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub mu: f64,
    /// Effective volatility of the component; must be positive.
    pub sigma: f64,
    /// Barrier level, held constant over the interval.
    pub level: f64,
}

impl BridgeSegment {
    #[inline]
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Level used for an affine barrier on `[t_start, t_end]`: its value at the
/// interval midpoint. An exact slanted-barrier treatment would replace this.
#[inline]
pub fn segment_level(barrier: &LinearBarrier, t_start: f64, t_end: f64) -> f64 {
    barrier.at(0.5 * (t_start + t_end))
}

/// Probability that the bridge stays strictly above `level` on the whole
/// interval. Zero when the end value is at or below the level.
pub fn survival_probability(seg: &BridgeSegment) -> f64 {
    if seg.x_end <= seg.level {
        return 0.0;
    }
    let a = seg.x_start - seg.level;
    let b = seg.x_end - seg.level;
    let exponent = 2.0 * a * b / (seg.duration() * seg.sigma * seg.sigma);
    // 1 - exp(-x), accurate for small x
    (-(-exponent).exp_m1()).clamp(0.0, 1.0)
}

/// Density of the first crossing time at `t`, conditional on both endpoint
/// values. Integrates to `1 - survival_probability(seg)` over the interval.
///
/// Evaluated in log space: the bridge normalizer is tiny when the endpoints
/// are far apart relative to `sigma * sqrt(tau)`.
pub fn interjump_fpt_density(seg: &BridgeSegment, t: f64) -> Result<f64> {
    if !(t > seg.t_start && t < seg.t_end) {
        return Err(Error::SingularEvaluation { t });
    }
    Ok(density_unchecked(seg, t))
}

#[inline]
fn density_unchecked(seg: &BridgeSegment, t: f64) -> f64 {
    let gap = seg.x_start - seg.level;
    if gap <= 0.0 {
        return 0.0;
    }
    let var = seg.sigma * seg.sigma;
    let tau = seg.duration();
    let since = t - seg.t_start;
    let until = seg.t_end - t;

    let d_end = seg.x_end - seg.level - seg.mu * until;
    let d_start = gap + seg.mu * since;
    let d_whole = seg.x_start - seg.x_end + seg.mu * tau;

    let ln_y = -(seg.sigma * (2.0 * PI * tau).sqrt()).ln() - d_whole * d_whole / (2.0 * tau * var);
    let ln_g = gap.ln()
        - (2.0 * PI * var).ln()
        - 1.5 * since.ln()
        - 0.5 * until.ln()
        - d_end * d_end / (2.0 * until * var)
        - d_start * d_start / (2.0 * since * var)
        - ln_y;
    ln_g.exp()
}

/// An accepted interior crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingDraw {
    /// Crossing time, in `(t_start, t_end)`.
    pub s: f64,
    /// Importance weight `b * g(s)` with `b = tau / (1 - P)`.
    pub weight: f64,
}

/// Uniform-proposal crossing draw.
///
/// Proposes `s = t_start + b u` with `u` uniform on `(0, 1]` and
/// `b = tau / (1 - P)`; the proposal lands inside the interval exactly when
/// `u <= 1 - P`, so acceptance happens with the bridge crossing probability.
/// Returns `None` without consuming randomness when survival is certain.
pub fn sample_crossing<R: Rng + ?Sized>(seg: &BridgeSegment, rng: &mut R) -> Option<CrossingDraw> {
    let survive = survival_probability(seg);
    if survive >= 1.0 - SURVIVAL_EPS {
        return None;
    }
    let cross = 1.0 - survive;
    let u = 1.0 - rng.random::<f64>();
    if u > cross {
        return None;
    }
    let width = seg.duration() / cross;
    let mut s = seg.t_start + width * u;
    if s >= seg.t_end {
        s = seg.t_end.next_down();
    }
    Some(CrossingDraw {
        s,
        weight: width * density_unchecked(seg, s),
    })
}

/// Index `j` (1-based) of the first jump whose post-jump value is at or
/// below the barrier while every earlier pre- and post-jump value and the
/// `j`-th pre-jump value are above it. `None` when no jump crosses.
///
/// Interior crossings are not considered; the engine sequences them.
pub fn first_jump_crossing(
    timeline: &JumpTimeline,
    barriers: &[LinearBarrier],
    i: usize,
) -> Option<usize> {
    let barrier = &barriers[i];
    for (k, (pre, post)) in timeline.pre_jump[i]
        .iter()
        .zip(&timeline.post_jump[i])
        .enumerate()
    {
        let level = barrier.at(timeline.instants[k + 1]);
        if *pre <= level {
            return None;
        }
        if *post <= level {
            return Some(k + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use fptmc_testkit::{bridge as oracle, closed_form, quad, stats};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seg(x_start: f64, x_end: f64, tau: f64, mu: f64, sigma: f64, level: f64) -> BridgeSegment {
        BridgeSegment {
            x_start,
            x_end,
            t_start: 0.25,
            t_end: 0.25 + tau,
            mu,
            sigma,
            level,
        }
    }

    fn integral(s: &BridgeSegment) -> f64 {
        quad::integrate(
            |t| interjump_fpt_density(s, t).unwrap_or(0.0),
            s.t_start,
            s.t_end,
            1e-10,
        )
    }

    #[test]
    fn survival_edge_cases() {
        assert_eq!(
            survival_probability(&seg(1.0, -0.1, 1.0, 0.0, 1.0, 0.0)),
            0.0
        );
        assert_eq!(
            survival_probability(&seg(1.0, 0.0, 1.0, 0.0, 1.0, 0.0)),
            0.0
        );
        assert_eq!(
            survival_probability(&seg(0.0, 1.0, 1.0, 0.0, 1.0, 0.0)),
            0.0
        );
        assert_relative_eq!(
            survival_probability(&seg(1.0, 1.0, 1.0, 0.0, 1.0, 0.0)),
            1.0 - (-2.0f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn survival_agrees_with_brute_force_bridges() {
        let s = seg(1.0, 1.0, 1.0, 0.0, 1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let case = oracle::BridgeCase {
            x_start: 1.0,
            x_end: 1.0,
            duration: 1.0,
            sigma: 1.0,
            level: 0.0,
        };
        let (freq, se) = oracle::survival_frequency(&case, 100_000, 1_000, &mut rng);
        let p = survival_probability(&s);
        assert!(
            (freq - p).abs() < 3.0 * se,
            "oracle {freq} +- {se}, closed form {p}"
        );
    }

    #[test]
    fn density_rejects_endpoints() {
        let s = seg(1.0, 1.0, 1.0, 0.0, 1.0, 0.0);
        assert!(interjump_fpt_density(&s, s.t_start).is_err());
        assert!(interjump_fpt_density(&s, s.t_end).is_err());
        assert!(interjump_fpt_density(&s, 0.5).is_ok());
    }

    #[test]
    fn certain_crossing_density_has_unit_mass() {
        for x_end in [-0.5, -0.01, 0.0] {
            let s = seg(0.4, x_end, 0.7, 0.1, 0.6, 0.0);
            assert!(
                (integral(&s) - 1.0).abs() < 1e-3,
                "x_end {x_end}: {}",
                integral(&s)
            );
        }
    }

    #[test]
    fn density_mass_matches_crossing_probability() {
        let s = seg(1.0, 1.0, 1.0, 0.0, 1.0, 0.0);
        let target = 1.0 - 0.864_665;
        assert!((integral(&s) - target).abs() < 1e-3);
        let drifted = BridgeSegment { mu: -0.7, ..s };
        assert!((integral(&drifted) - target).abs() < 1e-3);
    }

    #[test]
    fn density_equals_ratio_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let level = rng.random_range(-1.0..1.0);
            let x_start = level + rng.random_range(0.01..1.5);
            let x_end = level + rng.random_range(-1.0..1.5);
            let tau = rng.random_range(0.05..2.0);
            let s = BridgeSegment {
                x_start,
                x_end,
                t_start: rng.random_range(0.0..3.0),
                t_end: 0.0,
                mu: rng.random_range(-0.5..0.5),
                sigma: rng.random_range(0.1..1.5),
                level,
            };
            let s = BridgeSegment {
                t_end: s.t_start + tau,
                ..s
            };
            let t = s.t_start + tau * rng.random_range(0.01..0.99);
            let ours = interjump_fpt_density(&s, t).unwrap();
            let theirs = closed_form::bridge_crossing_density_ratio(
                t, s.t_start, s.t_end, s.x_start, s.x_end, s.level, s.mu, s.sigma,
            );
            if theirs > 1e-250 {
                assert_relative_eq!(ours, theirs, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn crossing_time_histogram_matches_density() {
        let s = BridgeSegment {
            x_start: 1.0,
            x_end: 0.3,
            t_start: 0.0,
            t_end: 1.0,
            mu: 0.0,
            sigma: 1.0,
            level: 0.0,
        };
        let case = oracle::BridgeCase {
            x_start: 1.0,
            x_end: 0.3,
            duration: 1.0,
            sigma: 1.0,
            level: 0.0,
        };
        let steps = 1_000;
        let dt = 1.0 / steps as f64;
        let bins = 20;
        let mut counts = vec![0.0; bins];
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let mut buf = Vec::new();
        let mut crossed = 0.0;
        for _ in 0..100_000 {
            if let Some(t) = oracle::first_crossing(&case, steps, &mut buf, &mut rng) {
                // midpoint of the step in which the crossing was detected
                let t = t - 0.5 * dt;
                counts[((t * bins as f64) as usize).min(bins - 1)] += 1.0;
                crossed += 1.0;
            }
        }
        let mass = 1.0 - survival_probability(&s);
        let expected: Vec<f64> = (0..bins)
            .map(|b| {
                let lo = b as f64 / bins as f64;
                let hi = (b + 1) as f64 / bins as f64;
                crossed * quad::integrate(|t| density_unchecked(&s, t), lo, hi, 1e-10) / mass
            })
            .collect();
        let p = stats::chi_square_p_value(&counts, &expected, 0);
        assert!(
            p > 0.01,
            "p = {p}\nobserved {counts:?}\nexpected {expected:?}"
        );
    }

    #[test]
    fn certain_crossing_always_accepts() {
        let s = seg(0.5, -0.2, 0.8, 0.0, 0.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut bins = [0.0; 10];
        for _ in 0..n {
            let d = sample_crossing(&s, &mut rng).expect("P = 0 must cross");
            assert!(d.s > s.t_start && d.s < s.t_end);
            bins[(((d.s - s.t_start) / 0.8 * 10.0) as usize).min(9)] += 1.0;
        }
        let expected = [n as f64 / 10.0; 10];
        assert!(stats::chi_square_p_value(&bins, &expected, 0) > 0.01);
    }

    #[test]
    fn acceptance_frequency_is_crossing_probability() {
        let s = seg(1.0, 1.0, 1.0, 0.0, 1.0, 0.0);
        let target = (-2.0f64).exp();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hits = (0..n)
            .filter(|_| sample_crossing(&s, &mut rng).is_some())
            .count();
        let freq = hits as f64 / n as f64;
        let se = (target * (1.0 - target) / n as f64).sqrt();
        assert!((freq - target).abs() < 3.0 * se, "{freq} vs {target}");
    }

    #[test]
    fn certain_survival_draws_nothing() {
        let s = seg(50.0, 50.0, 1.0, 0.0, 0.1, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let before = rng.clone();
        assert!(sample_crossing(&s, &mut rng).is_none());
        assert_eq!(rng, before);
    }

    #[test]
    fn weighted_draws_recover_density_at_midpoint() {
        let s = BridgeSegment {
            x_start: 0.6,
            x_end: 0.2,
            t_start: 0.0,
            t_end: 1.0,
            mu: 0.1,
            sigma: 0.8,
            level: 0.0,
        };
        let mid = 0.5;
        let half = 0.01;
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut acc = 0.0;
        for _ in 0..n {
            if let Some(d) = sample_crossing(&s, &mut rng) {
                if (d.s - mid).abs() < half {
                    acc += d.weight;
                }
            }
        }
        let est = acc / (n as f64 * 2.0 * half);
        let truth = interjump_fpt_density(&s, mid).unwrap();
        assert!((est / truth - 1.0).abs() < 0.05, "{est} vs {truth}");
    }

    #[test]
    fn first_jump_crossing_cases() {
        let barriers = [LinearBarrier::constant(0.0)];
        let no_jumps = JumpTimeline {
            instants: vec![0.0, 1.0],
            initial: vec![1.0],
            pre_jump: vec![vec![1.0]],
            post_jump: vec![vec![]],
        };
        assert_eq!(first_jump_crossing(&no_jumps, &barriers, 0), None);

        let one = JumpTimeline {
            instants: vec![0.0, 0.5, 1.0],
            initial: vec![1.0],
            pre_jump: vec![vec![1.0, 1.0]],
            post_jump: vec![vec![-1.0]],
        };
        assert_eq!(first_jump_crossing(&one, &barriers, 0), Some(1));

        let later = JumpTimeline {
            instants: vec![0.0, 0.2, 0.4, 1.0],
            initial: vec![1.0],
            pre_jump: vec![vec![1.0, 0.8, 0.5]],
            post_jump: vec![vec![0.9, -0.1]],
        };
        assert_eq!(first_jump_crossing(&later, &barriers, 0), Some(2));

        let pre_below = JumpTimeline {
            instants: vec![0.0, 0.2, 0.4, 1.0],
            initial: vec![1.0],
            pre_jump: vec![vec![-0.1, 0.8, 0.5]],
            post_jump: vec![vec![0.9, -0.1]],
        };
        assert_eq!(first_jump_crossing(&pre_below, &barriers, 0), None);
    }

    proptest! {
        #[test]
        fn survival_is_translation_invariant(
            gap_s in 0.01f64..2.0, gap_e in -1.0f64..2.0, level in -5.0f64..5.0,
            shift in -10.0f64..10.0, tau in 0.01f64..3.0, sigma in 0.05f64..2.0,
        ) {
            let a = seg(level + gap_s, level + gap_e, tau, 0.0, sigma, level);
            let b = seg(level + gap_s + shift, level + gap_e + shift, tau, 0.0, sigma, level + shift);
            prop_assert!((survival_probability(&a) - survival_probability(&b)).abs() < 1e-9);
        }

        #[test]
        fn survival_is_scale_invariant(
            gap_s in 0.01f64..2.0, gap_e in -1.0f64..2.0, c in 0.1f64..10.0,
            tau in 0.01f64..3.0, sigma in 0.05f64..2.0,
        ) {
            let a = seg(gap_s, gap_e, tau, 0.0, sigma, 0.0);
            let b = seg(c * gap_s, c * gap_e, tau, 0.0, c * sigma, 0.0);
            prop_assert!((survival_probability(&a) - survival_probability(&b)).abs() < 1e-12);
        }

        #[test]
        fn survival_is_a_probability(
            xs in -2.0f64..2.0, xe in -2.0f64..2.0, tau in 0.001f64..3.0, sigma in 0.01f64..2.0,
        ) {
            let p = survival_probability(&seg(xs, xe, tau, 0.0, sigma, 0.0));
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
