//! Kernel density estimation for first-passage-time samples.
//!
//! Marginal densities use the narrow Gaussian kernel
//! `K(h, x) = exp(-x^2 / (h^2/2)) / (sqrt(pi/2) h)` (a normal density with
//! standard deviation `h/2`) and a bandwidth taken from a gamma reference
//! density fitted by moments. Joint densities use the product kernel
//! `(2 pi h^2)^(-m/2) exp(-|x|^2 / (2 h^2))` with the normal-reference
//! bandwidth.
//!
//! Samples carry importance weights and the estimate is normalized by the
//! number of Monte Carlo runs, not the number of samples, so the result is a
//! sub-probability density whose mass is the estimated crossing probability.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Kernel contributions beyond this many bandwidths are dropped; the 1-D
/// kernel there is below `exp(-98)` of its peak.
const CUTOFF_1D: f64 = 7.0;
/// Same cut for the product kernel, in units of `h` per axis.
const CUTOFF_MULTI: f64 = 14.0;

/// Weighted sample points of fixed dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    n_runs: u64,
}

impl WeightedSamples {
    pub fn new(dim: usize, n_runs: u64) -> Self {
        assert!(dim > 0, "sample dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
            n_runs,
        }
    }

    /// One-dimensional samples from parallel slices.
    pub fn from_times(times: &[f64], weights: &[f64], n_runs: u64) -> Self {
        assert_eq!(
            times.len(),
            weights.len(),
            "times and weights differ in length"
        );
        Self {
            dim: 1,
            coords: times.to_vec(),
            weights: weights.to_vec(),
            n_runs,
        }
    }

    pub fn push(&mut self, point: &[f64], weight: f64) {
        assert_eq!(point.len(), self.dim);
        self.coords.extend_from_slice(point);
        self.weights.push(weight);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn n_runs(&self) -> u64 {
        self.n_runs
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Flat coordinates; for one-dimensional samples these are the times.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum(w) / n_runs`: the importance-sampling estimate of the crossing
    /// probability.
    pub fn weighted_fraction(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.n_runs as f64
    }

    /// Appends `other`'s samples and adds its run count.
    pub fn merge(&mut self, other: &WeightedSamples) {
        assert_eq!(self.dim, other.dim);
        self.coords.extend_from_slice(&other.coords);
        self.weights.extend_from_slice(&other.weights);
        self.n_runs += other.n_runs;
    }
}

/// Gamma reference density with rate `alpha` and shape `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub alpha: f64,
    pub beta: f64,
}

/// Shapes below this give a zero bandwidth functional; fits are clamped here.
pub const MIN_GAMMA_SHAPE: f64 = 3.0;

/// A density evaluated on a tensor grid. `values` are row-major with the
/// last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub total_mass: f64,
}

impl DensityEstimate {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Zero density on the given grid.
    pub fn zero(axes: Vec<Vec<f64>>, bandwidth: f64) -> Self {
        let len = axes.iter().map(Vec::len).product();
        Self {
            axes,
            values: vec![0.0; len],
            bandwidth,
            total_mass: 0.0,
        }
    }
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

#[inline]
fn kernel_1d(h: f64, x: f64) -> f64 {
    (-x * x / (0.5 * h * h)).exp() / ((0.5 * PI).sqrt() * h)
}

/// The one-dimensional estimation kernel.
pub fn gaussian_kernel(h: f64, x: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::NonPositiveBandwidth(h));
    }
    Ok(kernel_1d(h, x))
}

/// The `m`-dimensional product kernel at displacement `x`.
pub fn multivariate_kernel(h: f64, x: &[f64]) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let sq: f64 = x.iter().map(|v| v * v).sum();
    Ok((2.0 * PI * h * h).powf(-0.5 * x.len() as f64) * (-sq / (2.0 * h * h)).exp())
}

/// Method-of-moments gamma fit: `alpha = mean/var`, `beta = mean^2/var`,
/// with `beta` raised to [`MIN_GAMMA_SHAPE`] when smaller.
pub fn gamma_moment_fit(times: &[f64]) -> Result<GammaFit> {
    let n = times.len();
    if n < 2 {
        return Err(Error::DegenerateSample { count: n });
    }
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n as f64;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::DegenerateSample { count: n });
    }
    Ok(GammaFit {
        alpha: mean / var,
        beta: (mean * mean / var).max(MIN_GAMMA_SHAPE),
    })
}

/// `int (f'')^2 dt` for the gamma density of `fit`, in closed form.
pub fn roughness_functional(fit: &GammaFit) -> Result<f64> {
    let GammaFit { alpha, beta } = *fit;
    if beta.is_nan() || beta < MIN_GAMMA_SHAPE {
        return Err(Error::ShapeTooSmall(beta));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    // f'' = alpha^beta / Gamma(beta) * t^(beta-3) e^(-alpha t) (A t^2 + B t + C)
    let a = alpha * alpha;
    let b = -2.0 * alpha * (beta - 1.0);
    let c = (beta - 1.0) * (beta - 2.0);
    let w = [a * a, 2.0 * a * b, b * b + 2.0 * a * c, 2.0 * b * c, c * c];
    let ln_norm = 2.0 * ln_gamma(beta);
    let total: f64 = w
        .iter()
        .enumerate()
        .filter(|(_, wi)| **wi != 0.0)
        .map(|(k, wi)| {
            let i = (k + 1) as f64;
            let p = 2.0 * beta - i;
            let ln_mag =
                wi.abs().ln() + i * alpha.ln() + ln_gamma(p) - p * std::f64::consts::LN_2 - ln_norm;
            wi.signum() * ln_mag.exp()
        })
        .sum();
    Ok(total)
}

/// Asymptotically optimal bandwidth `(2 N sqrt(pi) R)^(-1/5)` for `N`
/// points drawn from a density with roughness `R` of the gamma reference.
pub fn optimal_bandwidth_1d(fit: &GammaFit, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "sample count must be positive"));
    }
    let r = roughness_functional(fit)?;
    Ok((2.0 * n as f64 * PI.sqrt() * r).powf(-0.2))
}

/// Normal-reference bandwidth `N^(-1/(m+4)) (4/(2m+1))^(1/(m+4))`.
pub fn optimal_bandwidth_multi(m: usize, n: usize) -> f64 {
    debug_assert!(m >= 1 && n >= 1);
    let e = 1.0 / (m as f64 + 4.0);
    (n as f64).powf(-e) * (4.0 / (2.0 * m as f64 + 1.0)).powf(e)
}

/// Gamma-reference bandwidth for `times`, or `fallback` when the sample
/// cannot be fitted (fewer than two points or zero spread).
pub fn gamma_reference_bandwidth(times: &[f64], fallback: f64) -> f64 {
    gamma_moment_fit(times)
        .and_then(|fit| optimal_bandwidth_1d(&fit, times.len()))
        .unwrap_or(fallback)
}

/// `f(t) = (1/n_runs) * sum_k w_k K(h, t - s_k)` on `grid`.
pub fn estimate_density_1d(
    samples: &WeightedSamples,
    grid: &[f64],
    h: f64,
) -> Result<DensityEstimate> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if samples.dim() != 1 {
        return Err(Error::DimensionMismatch {
            field: "samples",
            expected: 1,
            found: samples.dim(),
        });
    }
    let mut values = vec![0.0; grid.len()];
    if !samples.is_empty() {
        let reach = CUTOFF_1D * h;
        let norm = 1.0 / samples.n_runs() as f64;
        for (&s, &w) in samples.coords().iter().zip(samples.weights()) {
            let lo = grid.partition_point(|&t| t < s - reach);
            let hi = grid.partition_point(|&t| t <= s + reach);
            for (v, &t) in values[lo..hi].iter_mut().zip(&grid[lo..hi]) {
                *v += w * kernel_1d(h, t - s);
            }
        }
        values.iter_mut().for_each(|v| *v *= norm);
    }
    let axes = vec![grid.to_vec()];
    let total_mass = tensor_trapezoid(&axes, &values);
    Ok(DensityEstimate {
        axes,
        values,
        bandwidth: h,
        total_mass,
    })
}

/// Product-kernel estimate of a joint density on the tensor grid `axes`.
pub fn estimate_density_multi(
    samples: &WeightedSamples,
    axes: &[Vec<f64>],
    h: f64,
) -> Result<DensityEstimate> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if samples.dim() != axes.len() {
        return Err(Error::DimensionMismatch {
            field: "grid axes",
            expected: samples.dim(),
            found: axes.len(),
        });
    }
    let len: usize = axes.iter().map(Vec::len).product();
    let mut values = vec![0.0; len];
    if !samples.is_empty() {
        let reach = CUTOFF_MULTI * h;
        let axis_norm = 1.0 / (2.0 * PI * h * h).sqrt();
        let mut factors: Vec<Vec<f64>> = axes.iter().map(|a| vec![0.0; a.len()]).collect();
        for (point, &w) in samples.points().zip(samples.weights()) {
            for ((f, axis), &s) in factors.iter_mut().zip(axes).zip(point) {
                for (fv, &t) in f.iter_mut().zip(axis) {
                    let x = t - s;
                    *fv = if x.abs() > reach {
                        0.0
                    } else {
                        axis_norm * (-x * x / (2.0 * h * h)).exp()
                    };
                }
            }
            accumulate_outer(&mut values, &factors, w);
        }
        let norm = 1.0 / samples.n_runs() as f64;
        values.iter_mut().for_each(|v| *v *= norm);
    }
    let total_mass = tensor_trapezoid(axes, &values);
    Ok(DensityEstimate {
        axes: axes.to_vec(),
        values,
        bandwidth: h,
        total_mass,
    })
}

fn accumulate_outer(values: &mut [f64], factors: &[Vec<f64>], scale: f64) {
    let (head, rest) = factors.split_first().expect("at least one axis");
    if rest.is_empty() {
        for (v, f) in values.iter_mut().zip(head) {
            *v += scale * f;
        }
        return;
    }
    let stride = values.len() / head.len();
    for (block, &f) in values.chunks_exact_mut(stride).zip(head) {
        if f != 0.0 {
            accumulate_outer(block, rest, scale * f);
        }
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let half = 0.5 * (axis[k] - axis[k - 1]);
        w[k - 1] += half;
        w[k] += half;
    }
    w
}

/// Tensor-product trapezoidal integral of row-major `values` over `axes`.
pub fn tensor_trapezoid(axes: &[Vec<f64>], values: &[f64]) -> f64 {
    let weights: Vec<Vec<f64>> = axes.iter().map(|a| trapezoid_weights(a)).collect();
    fn rec(values: &[f64], weights: &[Vec<f64>]) -> f64 {
        let (head, rest) = weights.split_first().expect("at least one axis");
        if rest.is_empty() {
            return values.iter().zip(head).map(|(v, w)| v * w).sum();
        }
        let stride = values.len() / head.len();
        values
            .chunks_exact(stride)
            .zip(head)
            .map(|(block, w)| w * rec(block, rest))
            .sum()
    }
    if values.is_empty() {
        0.0
    } else {
        rec(values, &weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use fptmc_testkit::{closed_form, quad};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn roughness_by_quadrature(alpha: f64, beta: f64) -> f64 {
        quad::integrate_to_infinity(
            |t| closed_form::gamma_pdf_second_derivative(t, alpha, beta).powi(2),
            0.0,
            1e-13,
        )
    }

    #[test]
    fn kernel_values() {
        assert_relative_eq!(
            gaussian_kernel(1.0, 0.0).unwrap(),
            0.797_884_560_802_865_4,
            epsilon = 1e-15
        );
        assert!(gaussian_kernel(0.0, 1.0).is_err());
        assert!(gaussian_kernel(-1.0, 1.0).is_err());
    }

    #[test]
    fn kernels_have_unit_mass() {
        for h in [0.01, 0.3, 1.0, 4.0] {
            let one = quad::integrate_real_line(|x| kernel_1d(h, x), 1e-13);
            assert!((one - 1.0).abs() < 1e-8, "h {h}: {one}");
            let axis = quad::integrate_real_line(|x| multivariate_kernel(h, &[x]).unwrap(), 1e-13);
            assert!((axis - 1.0).abs() < 1e-8, "h {h}: {axis}");
        }
        // two dimensions as an iterated integral
        let h = 0.7;
        let two = quad::integrate_real_line(
            |x| quad::integrate_real_line(|y| multivariate_kernel(h, &[x, y]).unwrap(), 1e-12),
            1e-12,
        );
        assert!((two - 1.0).abs() < 1e-8, "{two}");
    }

    #[test]
    fn gamma_fit_examples() {
        // mean 2, population sd 1
        let fit = gamma_moment_fit(&[1.0, 3.0]).unwrap();
        assert_relative_eq!(fit.alpha, 2.0);
        assert_relative_eq!(fit.beta, 4.0);
        // mean 1, sd 1: raw beta 1 is clamped
        let fit = gamma_moment_fit(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(fit.alpha, 1.0);
        assert_eq!(fit.beta, 3.0);

        assert_eq!(
            gamma_moment_fit(&[1.0]),
            Err(Error::DegenerateSample { count: 1 })
        );
        assert_eq!(
            gamma_moment_fit(&[0.5, 0.5, 0.5]),
            Err(Error::DegenerateSample { count: 3 })
        );
    }

    #[test]
    fn gamma_fit_recovers_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dist = Gamma::new(5.0, 1.0 / 5.0).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        let fit = gamma_moment_fit(&xs).unwrap();
        assert!((fit.alpha / 5.0 - 1.0).abs() < 0.02, "{fit:?}");
        assert!((fit.beta / 5.0 - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn roughness_reference_value() {
        let r = roughness_functional(&GammaFit {
            alpha: 1.0,
            beta: 3.0,
        })
        .unwrap();
        assert_relative_eq!(r, 3.0 / 16.0, max_relative = 1e-13);
        assert_relative_eq!(
            roughness_by_quadrature(1.0, 3.0),
            3.0 / 16.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn roughness_rejects_small_shape() {
        assert_eq!(
            roughness_functional(&GammaFit {
                alpha: 1.0,
                beta: 2.5
            }),
            Err(Error::ShapeTooSmall(2.5))
        );
    }

    #[test]
    fn roughness_matches_quadrature_on_grid() {
        for alpha in [0.5, 1.0, 2.0, 4.0, 8.0] {
            for beta in [3.0, 4.0, 5.0, 6.0, 8.0] {
                let closed = roughness_functional(&GammaFit { alpha, beta }).unwrap();
                let quad = roughness_by_quadrature(alpha, beta);
                assert!(
                    (closed / quad - 1.0).abs() < 1e-6,
                    "alpha {alpha} beta {beta}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn bandwidth_examples() {
        let fit = GammaFit {
            alpha: 1.0,
            beta: 3.0,
        };
        let h = optimal_bandwidth_1d(&fit, 100_000).unwrap();
        let direct = (2.0 * 1e5 * PI.sqrt() * 0.1875f64).powf(-0.2);
        assert_relative_eq!(h, direct, max_relative = 1e-12);
        assert!((h - 0.1085).abs() < 1e-4, "{h}");

        assert!((optimal_bandwidth_multi(2, 100_000) - 0.14142).abs() < 1e-5);
        assert!((optimal_bandwidth_multi(1, 1) - 1.0592).abs() < 1e-4);
    }

    #[test]
    fn multivariate_kernel_reduces_to_wide_gaussian() {
        let h: f64 = 0.3;
        let x: f64 = 0.17;
        let normal = (-x * x / (2.0 * h * h)).exp() / (h * (2.0 * PI).sqrt());
        assert_relative_eq!(
            multivariate_kernel(h, &[x]).unwrap(),
            normal,
            max_relative = 1e-14
        );
    }

    #[test]
    fn single_sample_reproduces_kernel() {
        let s = WeightedSamples::from_times(&[0.5], &[1.0], 1);
        let grid = uniform_grid(0.0, 1.0, 512);
        let h = 0.05;
        let est = estimate_density_1d(&s, &grid, h).unwrap();
        for (t, v) in grid.iter().zip(&est.values) {
            assert!((v - kernel_1d(h, t - 0.5)).abs() <= 1e-15 * kernel_1d(h, 0.0));
        }
        assert!((est.total_mass - 1.0).abs() < 1e-4);
    }

    #[test]
    fn unit_weights_give_classical_estimator() {
        let times = [0.1, 0.25, 0.4, 0.41, 0.8];
        let s = WeightedSamples::from_times(&times, &[1.0; 5], 5);
        let grid = uniform_grid(0.0, 1.0, 64);
        let h = 0.07;
        let est = estimate_density_1d(&s, &grid, h).unwrap();
        for (t, v) in grid.iter().zip(&est.values) {
            let classic = times.iter().map(|s| kernel_1d(h, t - s)).sum::<f64>() / 5.0;
            assert_relative_eq!(*v, classic, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn empty_samples_give_zero_density() {
        let s = WeightedSamples::new(1, 10);
        let grid = uniform_grid(0.0, 1.0, 16);
        let est = estimate_density_1d(&s, &grid, 0.1).unwrap();
        assert!(est.values.iter().all(|&v| v == 0.0));
        assert_eq!(est.total_mass, 0.0);
        let s2 = WeightedSamples::new(2, 10);
        let est2 = estimate_density_multi(&s2, &[grid.clone(), grid], 0.1).unwrap();
        assert!(est2.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn joint_single_sample_peak() {
        let mut s = WeightedSamples::new(2, 1);
        s.push(&[0.5, 0.5], 1.0);
        let axis = uniform_grid(0.0, 1.0, 129);
        let h = 0.1;
        let est = estimate_density_multi(&s, &[axis.clone(), axis.clone()], h).unwrap();
        let peak = est.values[64 * 129 + 64];
        assert_relative_eq!(peak, 1.0 / (2.0 * PI * h * h), max_relative = 1e-14);
        let off = est.values[10 * 129 + 100];
        let want = multivariate_kernel(h, &[axis[10] - 0.5, axis[100] - 0.5]).unwrap();
        assert_relative_eq!(off, want, max_relative = 1e-12);
    }

    #[test]
    fn joint_of_independent_samples_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ga = Gamma::new(4.0, 0.08).unwrap();
        let gb = Gamma::new(6.0, 0.06).unwrap();
        let n = 100_000;
        let mut joint = WeightedSamples::new(2, n as u64);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, y) = (ga.sample(&mut rng), gb.sample(&mut rng));
            joint.push(&[x, y], 1.0);
            a.push(x);
            b.push(y);
        }
        let h = optimal_bandwidth_multi(2, n);
        let axis = uniform_grid(0.0, 1.0, 64);
        let est = estimate_density_multi(&joint, &[axis.clone(), axis.clone()], h).unwrap();
        let ones = vec![1.0; n];
        let ma = estimate_density_multi(
            &WeightedSamples::from_times(&a, &ones, n as u64),
            std::slice::from_ref(&axis),
            h,
        )
        .unwrap();
        let mb = estimate_density_multi(
            &WeightedSamples::from_times(&b, &ones, n as u64),
            std::slice::from_ref(&axis),
            h,
        )
        .unwrap();
        let outer: Vec<f64> = ma
            .values
            .iter()
            .flat_map(|x| mb.values.iter().map(move |y| x * y))
            .collect();
        let diff: Vec<f64> = est
            .values
            .iter()
            .zip(&outer)
            .map(|(p, q)| (p - q).abs())
            .collect();
        let l1 = tensor_trapezoid(&est.axes, &diff);
        assert!(l1 < 0.05, "L1 {l1}");
    }

    #[test]
    fn trapezoid_of_constant() {
        let axis = uniform_grid(0.0, 2.0, 11);
        let axes = vec![axis.clone(), uniform_grid(0.0, 0.5, 7)];
        let values = vec![3.0; 77];
        assert_relative_eq!(tensor_trapezoid(&axes, &values), 3.0, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn kernel_is_symmetric(h in 1e-3f64..10.0, x in -5.0f64..5.0) {
            prop_assert_eq!(kernel_1d(h, x), kernel_1d(h, -x));
            prop_assert!(kernel_1d(h, x) <= kernel_1d(h, 0.0));
        }

        #[test]
        fn bandwidth_1d_power_law(alpha in 0.5f64..20.0, beta in 3.0f64..12.0, n in 1usize..1_000_000) {
            let fit = GammaFit { alpha, beta };
            let h = optimal_bandwidth_1d(&fit, n).unwrap();
            let h16 = optimal_bandwidth_1d(&fit, 16 * n).unwrap();
            prop_assert!((h16 / h - 16f64.powf(-0.2)).abs() < 1e-12);
        }

        #[test]
        fn bandwidth_multi_doubling(m in 1usize..5, n in 1usize..10_000) {
            let h = optimal_bandwidth_multi(m, n);
            let h2 = optimal_bandwidth_multi(m, n << (m + 4));
            prop_assert!((h2 - h / 2.0).abs() < 1e-14 * h);
        }

        #[test]
        fn roughness_scales_with_fifth_power(alpha in 0.2f64..10.0, beta in 3.0f64..10.0, c in 0.2f64..5.0) {
            let r = roughness_functional(&GammaFit { alpha, beta }).unwrap();
            let rc = roughness_functional(&GammaFit { alpha: c * alpha, beta }).unwrap();
            prop_assert!((rc / (c.powi(5) * r) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn estimator_is_linear_in_batches(
            a in proptest::collection::vec((0.0f64..1.0, 0.1f64..3.0), 0..20),
            b in proptest::collection::vec((0.0f64..1.0, 0.1f64..3.0), 0..20),
            extra_a in 0u64..5, extra_b in 0u64..5,
        ) {
            let mk = |xs: &[(f64, f64)], extra: u64| {
                let t: Vec<f64> = xs.iter().map(|p| p.0).collect();
                let w: Vec<f64> = xs.iter().map(|p| p.1).collect();
                WeightedSamples::from_times(&t, &w, xs.len() as u64 + extra + 1)
            };
            let sa = mk(&a, extra_a);
            let sb = mk(&b, extra_b);
            let mut both = sa.clone();
            both.merge(&sb);
            let grid = uniform_grid(0.0, 1.0, 33);
            let h = 0.08;
            let fa = estimate_density_1d(&sa, &grid, h).unwrap();
            let fb = estimate_density_1d(&sb, &grid, h).unwrap();
            let fab = estimate_density_1d(&both, &grid, h).unwrap();
            let (na, nb) = (sa.n_runs() as f64, sb.n_runs() as f64);
            for k in 0..grid.len() {
                let mix = (na * fa.values[k] + nb * fb.values[k]) / (na + nb);
                prop_assert!((fab.values[k] - mix).abs() <= 1e-12 * (1.0 + mix));
            }
        }
    }
}
