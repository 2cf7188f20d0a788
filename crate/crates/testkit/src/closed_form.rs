//! Textbook closed forms for drifted Brownian motion and the gamma density.

use std::f64::consts::PI;

/// Transition density of `x + mu*t + sigma*W_t` evaluated at `y`.
pub fn transition_density(y: f64, x: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    let var = sigma * sigma * t;
    let d = y - x - mu * t;
    (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// First hitting-time density of the level `level < x` for `x + mu*t + sigma*W_t`.
pub fn hitting_density(t: f64, x: f64, level: f64, mu: f64, sigma: f64) -> f64 {
    let gap = x - level;
    let d = gap + mu * t;
    gap / (sigma * (2.0 * PI * t * t * t).sqrt()) * (-d * d / (2.0 * sigma * sigma * t)).exp()
}

/// Density of the first crossing time of a drifted Brownian bridge, built as
/// the ratio (hitting density) x (transition from the level to the end) /
/// (transition from start to end).
#[allow(clippy::too_many_arguments)]
pub fn bridge_crossing_density_ratio(
    t: f64,
    t_start: f64,
    t_end: f64,
    x_start: f64,
    x_end: f64,
    level: f64,
    mu: f64,
    sigma: f64,
) -> f64 {
    let hit = hitting_density(t - t_start, x_start, level, mu, sigma);
    let onward = transition_density(x_end, level, mu, sigma, t_end - t);
    let whole = transition_density(x_end, x_start, mu, sigma, t_end - t_start);
    hit * onward / whole
}

/// Probability that `x0 + mu*t + sigma*W_t` reaches `level < x0` by time `t`.
pub fn crossing_probability(x0: f64, level: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::new(0.0, 1.0).unwrap();
    let b = level - x0;
    let s = sigma * t.sqrt();
    n.cdf((b - mu * t) / s) + (2.0 * mu * b / (sigma * sigma)).exp() * n.cdf((b + mu * t) / s)
}

/// Second derivative of the gamma density with rate `alpha` and shape `beta`,
/// by the product rule applied to `c * t^(beta-1) * exp(-alpha t)`.
pub fn gamma_pdf_second_derivative(t: f64, alpha: f64, beta: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let ln_c = beta * alpha.ln() - statrs::function::gamma::ln_gamma(beta);
    let e = (ln_c - alpha * t).exp();
    let p = beta - 1.0;
    let term0 = p * (p - 1.0) * t.powf(p - 2.0);
    let term1 = -2.0 * alpha * p * t.powf(p - 1.0);
    let term2 = alpha * alpha * t.powf(p);
    e * (term0 + term1 + term2)
}
