//! Sample summaries with pairwise reductions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_cdf;

/// Reference moments used to standardise before the KS comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub const STANDARD: Moments = Moments { mean: 0.0, variance: 1.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    /// Unbiased.
    pub variance: f64,
    /// `variance·√(2/(n−1))`, exact under normality.
    pub variance_stderr: f64,
    /// `m₃/m₂^{3/2}`; NaN for a constant sample.
    pub skewness: f64,
    /// `m₄/m₂² − 3`; NaN for a constant sample.
    pub excess_kurtosis: f64,
    /// Against `N(reference.mean, reference.variance)`.
    pub ks_statistic: f64,
}

/// Pairwise (cascade) summation: error `O(ε log n)`, and the result does
/// not depend on how the input was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean of `values` by pairwise summation, shifted by the first value so
/// that constant input yields that constant exactly.
pub fn mean(values: &[f64]) -> f64 {
    let shift = values[0];
    let deviations: Vec<f64> = values.iter().map(|v| v - shift).collect();
    shift + pairwise_sum(&deviations) / values.len() as f64
}

/// `sup |F_n − Φ|` for already standardised values.
pub fn ks_statistic(standardized: &[f64]) -> f64 {
    let mut x = standardized.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal_cdf(v);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn summarize(values: &[f64], reference: Moments) -> Result<McSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::validation("values", format!("need at least 2 values, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("values", "must be finite"));
    }
    if !(reference.variance > 0.0) {
        return Err(Error::validation("reference.variance", "must be positive"));
    }
    let nf = n as f64;
    let mu = mean(values);
    let central = |p: i32| pairwise_sum(&values.iter().map(|v| (v - mu).powi(p)).collect::<Vec<_>>()) / nf;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let variance = m2 * nf / (nf - 1.0);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    let sd = reference.variance.sqrt();
    let standardized: Vec<f64> = values.iter().map(|v| (v - reference.mean) / sd).collect();
    Ok(McSummary {
        n,
        mean: mu,
        mean_stderr: (variance / nf).sqrt(),
        variance,
        variance_stderr: variance * (2.0 / (nf - 1.0)).sqrt(),
        skewness,
        excess_kurtosis,
        ks_statistic: ks_statistic(&standardized),
    })
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = mean(values);
    let var = pairwise_sum(&values.iter().map(|v| (v - mu) * (v - mu)).collect::<Vec<_>>()) / (n - 1.0);
    (mu, (var / n).sqrt())
}

/// Sample covariance of paired values and the standard error of the
/// estimate (from the spread of the centred products).
pub fn covariance_and_stderr(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let n = products.len() as f64;
    let (m, se) = mean_and_stderr(&products);
    (m * n / (n - 1.0), se)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median of block means over `blocks` consecutive blocks, with a robust
/// standard error `1.2533·1.4826·MAD/√blocks`.
pub fn median_of_means(values: &[f64], blocks: usize) -> Result<(f64, f64)> {
    if blocks < 2 || values.len() < blocks {
        return Err(Error::validation("blocks", "need at least two non-empty blocks"));
    }
    let size = values.len() / blocks;
    let mut means: Vec<f64> = (0..blocks).map(|b| mean(&values[b * size..(b + 1) * size])).collect();
    means.sort_by(f64::total_cmp);
    let med = median(&means);
    let mut dev: Vec<f64> = means.iter().map(|m| (m - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    Ok((med, 1.2533 * 1.4826 * mad / (blocks as f64).sqrt()))
}
