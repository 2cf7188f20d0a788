//! Small statistics helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pearson chi-square goodness-of-fit p-value for observed counts against
/// expected counts. Degrees of freedom are `bins - 1 - fitted_params`.
pub fn chi_square_p_value(observed: &[f64], expected: &[f64], fitted_params: usize) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (observed.len() - 1 - fitted_params) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Trapezoidal integral of `ys` sampled at `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `int |a - b| / int |b|` on a shared grid.
pub fn normalized_l1(xs: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| (p - q).abs()).collect();
    let norm: Vec<f64> = b.iter().map(|q| q.abs()).collect();
    trapezoid(xs, &diff) / trapezoid(xs, &norm)
}
