//! Small numeric helpers: angle arithmetic, stable log-sum-exp, fits.

use std::f64::consts::{PI, TAU};

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut w = x.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Weighted circular mean: the argument of the weighted resultant vector.
///
/// Weights must be non-negative. Returns 0 for an empty input or a zero
/// resultant (the circular mean is undefined there).
pub fn circular_mean_weighted(phases: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(phases.len(), weights.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (&p, &w) in phases.iter().zip(weights) {
        let (s, c) = p.sin_cos();
        re += w * c;
        im += w * s;
    }
    if re == 0.0 && im == 0.0 {
        0.0
    } else {
        im.atan2(re)
    }
}

/// Unweighted circular mean.
pub fn circular_mean(phases: &[f64]) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for &p in phases {
        let (s, c) = p.sin_cos();
        re += c;
        im += s;
    }
    if re == 0.0 && im == 0.0 {
        0.0
    } else {
        im.atan2(re)
    }
}

/// log(sum(exp(x_i))) with max subtraction. Returns -inf for an empty slice
/// or when every element is -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    let sum: f64 = xs.iter().map(|&x| (x - mx).exp()).sum();
    mx + sum.ln()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Ordinary least squares line fit, returning `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "line fit needs at least two points");
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
