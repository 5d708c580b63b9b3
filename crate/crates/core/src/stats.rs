//! Normal distribution helpers and Monte Carlo summaries.

use libm::erfc;
use serde::Serialize;
use std::f64::consts::SQRT_2;

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 - Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Two-sided p-value `2Φ(-|x|)`.
pub fn two_sided_p_value(x: f64) -> f64 {
    erfc(x.abs() / SQRT_2)
}

/// `P(|Z| <= t)` for `Z ~ N(0,1)`, i.e. `2Φ(t) - 1`, computed without cancellation.
pub fn central_mass(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        1.0 - erfc(t / SQRT_2)
    }
}

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    /// Summarise replicate values. The standard error is NaN with fewer than two samples.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = pairwise_sum(samples) / n as f64;
        let se = if n < 2 {
            f64::NAN
        } else {
            let sq: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (n as f64 - 1.0) / n as f64).sqrt()
        };
        MeanSe { mean, se, n }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
