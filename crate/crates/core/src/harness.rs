//! Replicated experiments and the statistical verifications built on them.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chaos::{cov_loglog, log_m_value, mean_log, wick_pair_expectation, wick_power};
use crate::covariance::{predict, CovOptions, TheoryPrediction};
use crate::error::{Error, Result};
use crate::field::{GefSample, MAX_RHO};
use crate::geometry::{Curve, NamedChain, RChain};
use crate::rng::{complex_normal, replicate_seed, stream_rng};
use crate::roots::{zero_count_oracle, ZeroDomain};
use crate::special::zeta_tail;
use crate::stats::{covariance_and_stderr, mean_and_stderr, median_of_means, summarize, McSummary, Moments};
use crate::winding::{increment_chain, winding_number, IncrementOptions};

/// Margin on the field certification radius.
pub const CERTIFICATION_MARGIN: f64 = 1.02;
/// Replicates may be dropped for near-zero events up to this fraction.
pub const DROP_FLAG_FRACTION: f64 = 0.01;
pub const SKEWNESS_MAX: f64 = 0.2;
pub const EXCESS_KURTOSIS_MAX: f64 = 0.4;
/// Asymptotic 1% critical value of `√n·KS`.
pub const KS_COEFFICIENT: f64 = 1.628;
pub const WICK_BLOCKS: usize = 50;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub chains: Vec<NamedChain>,
    pub r_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub increment_opts: IncrementOptions,
    pub tail_tol: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains.is_empty() {
            return Err(Error::validation("chains", "at least one chain is required"));
        }
        if self.r_grid.is_empty() {
            return Err(Error::validation("R_grid", "at least one radius is required"));
        }
        if self.r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::validation("R_grid", "radii must be positive"));
        }
        if self.r_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("R_grid", "must be strictly ascending"));
        }
        if self.replicates < 2 {
            return Err(Error::validation("replicates", "need at least 2"));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::validation("tail_tol", "must lie in (0, 1)"));
        }
        self.increment_opts.validate()?;
        let rho = self.certification_radius();
        if rho > MAX_RHO {
            return Err(Error::validation(
                "R_grid",
                format!("chains at max R need a certified radius {rho:.3} above the limit {MAX_RHO}"),
            ));
        }
        Ok(())
    }

    /// `1.02 · max|z| · max R`.
    pub fn certification_radius(&self) -> f64 {
        let extent = self.chains.iter().map(|c| c.chain.max_modulus()).fold(0.0, f64::max);
        let r_max = self.r_grid.iter().cloned().fold(0.0, f64::max);
        CERTIFICATION_MARGIN * extent * r_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub chain_id: String,
    pub r: f64,
    pub raw: f64,
    pub centered: f64,
    pub min_modulus: f64,
    /// Distinct warning names joined by `;`.
    pub warnings: String,
    /// Unweighted increment along each curve of the chain.
    pub per_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedReplicate {
    pub replicate: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTable {
    /// Ordered by replicate, then chain, then R.
    pub rows: Vec<ReplicateRow>,
    pub dropped: Vec<DroppedReplicate>,
    pub attempted: usize,
}

impl ReplicateTable {
    /// More than 1% of replicates were dropped.
    pub fn flagged(&self) -> bool {
        self.dropped.len() as f64 > DROP_FLAG_FRACTION * self.attempted as f64
    }

    /// Raw values of one (chain, R) cell in replicate order.
    pub fn raw_values(&self, chain_id: &str, r: f64) -> Vec<f64> {
        self.cell(chain_id, r).map(|row| row.raw).collect()
    }

    pub fn cell<'a>(&'a self, chain_id: &'a str, r: f64) -> impl Iterator<Item = &'a ReplicateRow> + 'a {
        self.rows.iter().filter(move |row| row.chain_id == chain_id && row.r == r)
    }
}

fn warning_names(inc: &crate::winding::ChainIncrement) -> String {
    let mut names: Vec<String> = inc.warnings().map(|w| w.to_string()).collect();
    names.sort();
    names.dedup();
    names.join(";")
}

/// One replicate across every (chain, R) cell; `Err` carries a drop reason
/// or a fatal error.
fn replicate(config: &ExperimentConfig, k: usize, rho: f64) -> Result<std::result::Result<Vec<ReplicateRow>, String>> {
    let sample = GefSample::sample(replicate_seed(config.seed, k as u64), rho, config.tail_tol)?;
    let mut rows = Vec::with_capacity(config.chains.len() * config.r_grid.len());
    for named in &config.chains {
        for &r in &config.r_grid {
            let inc = match increment_chain(&sample, &named.chain, r, &config.increment_opts) {
                Ok(inc) => inc,
                Err(e @ Error::Numerical { .. }) => return Ok(Err(format!("{}: {e}", named.id))),
                Err(e) => return Err(e),
            };
            if inc.has_zero_warning() {
                return Ok(Err(format!("{} at R={r}: possible zero on curve", named.id)));
            }
            rows.push(ReplicateRow {
                replicate: k,
                chain_id: named.id.clone(),
                r,
                raw: inc.raw,
                centered: inc.centered,
                min_modulus: inc.min_modulus(),
                warnings: warning_names(&inc),
                per_curve: inc.per_curve.iter().map(|p| p.value).collect(),
            });
        }
    }
    Ok(Ok(rows))
}

/// Run every replicate. Replicate `k` draws its field from
/// `replicate_seed(seed, k)`, so the table does not depend on scheduling or
/// thread count. Replicates with numerical failures or possible zeros on a
/// curve are dropped whole and listed.
pub fn run_replicates(config: &ExperimentConfig) -> Result<ReplicateTable> {
    config.validate()?;
    let rho = config.certification_radius();
    let results: Vec<_> = (0..config.replicates)
        .into_par_iter()
        .map(|k| replicate(config, k, rho))
        .collect();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (k, res) in results.into_iter().enumerate() {
        match res? {
            Ok(r) => rows.extend(r),
            Err(reason) => dropped.push(DroppedReplicate { replicate: k, reason }),
        }
    }
    Ok(ReplicateTable {
        rows,
        dropped,
        attempted: config.replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub chain_id: String,
    pub r: f64,
    pub summary: McSummary,
    pub theory: TheoryPrediction,
}

/// Theory predictions (mean, quadrature and asymptotic variance) per
/// (chain, R).
pub fn predictions(config: &ExperimentConfig, cov_opts: &CovOptions) -> Result<Vec<(String, TheoryPrediction)>> {
    let mut out = Vec::new();
    for named in &config.chains {
        for &r in &config.r_grid {
            out.push((named.id.clone(), predict(&named.chain, &named.chain, r, cov_opts)?));
        }
    }
    Ok(out)
}

/// Summary statistics per (chain, R), standardised by the theory moments.
pub fn summarize_table(table: &ReplicateTable, predictions: &[(String, TheoryPrediction)]) -> Result<Vec<SummaryRow>> {
    predictions
        .iter()
        .map(|(id, theory)| {
            let values = table.raw_values(id, theory.r);
            // An identically vanishing chain has no spread to standardise by.
            let variance = if theory.cov_finite_r > 0.0 { theory.cov_finite_r } else { 1.0 };
            let summary = summarize(
                &values,
                Moments {
                    mean: theory.mean,
                    variance,
                },
            )?;
            Ok(SummaryRow {
                chain_id: id.clone(),
                r: theory.r,
                summary,
                theory: *theory,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub chain_id: String,
    pub r: f64,
    pub mc_variance: f64,
    pub mc_stderr: f64,
    pub quad_cov: f64,
    pub quad_bound: f64,
    pub asym_cov: f64,
    pub ratio_mc_quad: f64,
    pub ratio_quad_asym: f64,
}

pub fn verify_variance(summaries: &[SummaryRow]) -> Vec<VarianceRow> {
    summaries
        .iter()
        .map(|s| VarianceRow {
            chain_id: s.chain_id.clone(),
            r: s.r,
            mc_variance: s.summary.variance,
            mc_stderr: s.summary.variance_stderr,
            quad_cov: s.theory.cov_finite_r,
            quad_bound: s.theory.cov_stderr_bound,
            asym_cov: s.theory.asymptotic_cov,
            ratio_mc_quad: s.summary.variance / s.theory.cov_finite_r,
            ratio_quad_asym: s.theory.cov_finite_r / s.theory.asymptotic_cov,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityCheck {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub skewness_ok: bool,
    pub kurtosis_ok: bool,
    pub ks_ok: bool,
}

impl NormalityCheck {
    pub fn passed(&self) -> bool {
        self.skewness_ok && self.kurtosis_ok && self.ks_ok
    }
}

/// Apply the fixed thresholds to a summary standardised by theory moments.
pub fn check_normality(summary: &McSummary) -> NormalityCheck {
    let ks_critical = KS_COEFFICIENT / (summary.n as f64).sqrt();
    NormalityCheck {
        skewness: summary.skewness,
        excess_kurtosis: summary.excess_kurtosis,
        ks_statistic: summary.ks_statistic,
        ks_critical,
        skewness_ok: summary.skewness.abs() < SKEWNESS_MAX,
        kurtosis_ok: summary.excess_kurtosis.abs() < EXCESS_KURTOSIS_MAX,
        ks_ok: summary.ks_statistic < ks_critical,
    }
}

pub fn verify_normality(summaries: &[SummaryRow]) -> Vec<(String, f64, NormalityCheck)> {
    summaries
        .iter()
        .map(|s| (s.chain_id.clone(), s.r, check_normality(&s.summary)))
        .collect()
}

/// Fraction of `trials` standard-normal samples of size `n` passing the
/// normality thresholds.
pub fn normality_null_pass_rate(seed: u64, trials: usize, n: usize) -> f64 {
    let passed = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream_rng(seed, t as u64);
            let v: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            summarize(&v, Moments::STANDARD)
                .map(|s| check_normality(&s).passed())
                .unwrap_or(false)
        })
        .count();
    passed as f64 / trials as f64
}

/// An estimate with its standard error and the value theory predicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub theory: f64,
}

impl Estimate {
    /// `|estimate − theory| / stderr`, zero when both coincide exactly.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.theory).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WickReport {
    pub theta: f64,
    pub loglog_cov: Estimate,
    pub mean_log: Estimate,
    /// `(α, β, estimate)` for α, β ∈ 1..=3.
    pub pairs: Vec<(u32, u32, Estimate)>,
    /// Median-of-means estimate of `E[ζ₁/ζ₂]` (real and imaginary parts).
    pub ratio_re: Estimate,
    pub ratio_im: Estimate,
}

/// Correlated standard complex Gaussians with `E[ζ₁ conj ζ₂] = θ`:
/// `ζ₂ = g₁`, `ζ₁ = θg₁ + √(1−θ²) g₂`.
pub fn correlated_pairs(seed: u64, stream: u64, m: usize, theta: f64) -> Vec<(Complex64, Complex64)> {
    let mut rng = stream_rng(seed, stream);
    let s = (1.0 - theta * theta).sqrt();
    (0..m)
        .map(|_| {
            let g1 = complex_normal(&mut rng);
            let g2 = complex_normal(&mut rng);
            (g1 * theta + g2 * s, g1)
        })
        .collect()
}

/// Scalar Monte Carlo checks of the log-covariance, pair Wick
/// orthogonality, `E[log|ζ|]` and the ratio mean, per θ (real, in [0, 1)).
pub fn verify_wick(seed: u64, m: usize, theta_grid: &[f64]) -> Result<Vec<WickReport>> {
    if m < 2 * WICK_BLOCKS {
        return Err(Error::validation("M", format!("need at least {} draws", 2 * WICK_BLOCKS)));
    }
    theta_grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            if !(0.0..1.0).contains(&theta) {
                return Err(Error::validation("theta", "must lie in [0, 1)"));
            }
            let pairs = correlated_pairs(seed, i as u64, m, theta);
            let l1: Vec<f64> = pairs.iter().map(|(a, _)| a.norm().ln()).collect();
            let l2: Vec<f64> = pairs.iter().map(|(_, b)| b.norm().ln()).collect();
            let (cov, cov_se) = covariance_and_stderr(&l1, &l2);
            let (ml, ml_se) = mean_and_stderr(&l1);
            let theta_c = Complex64::new(theta, 0.0);
            let mut table = Vec::new();
            for alpha in 1..=3 {
                for beta in 1..=3 {
                    let products: Vec<f64> = pairs
                        .iter()
                        .map(|(a, b)| wick_power(alpha, a.norm_sqr()) * wick_power(beta, b.norm_sqr()))
                        .collect();
                    let (e, se) = mean_and_stderr(&products);
                    table.push((
                        alpha,
                        beta,
                        Estimate {
                            estimate: e,
                            stderr: se,
                            theory: wick_pair_expectation(alpha, beta, theta_c),
                        },
                    ));
                }
            }
            let ratios: Vec<Complex64> = pairs.iter().map(|(a, b)| a / b).collect();
            let (re, re_se) = median_of_means(&ratios.iter().map(|z| z.re).collect::<Vec<_>>(), WICK_BLOCKS)?;
            let (im, im_se) = median_of_means(&ratios.iter().map(|z| z.im).collect::<Vec<_>>(), WICK_BLOCKS)?;
            Ok(WickReport {
                theta,
                loglog_cov: Estimate {
                    estimate: cov,
                    stderr: cov_se,
                    theory: cov_loglog(theta_c)?,
                },
                mean_log: Estimate {
                    estimate: ml,
                    stderr: ml_se,
                    theory: mean_log(),
                },
                pairs: table,
                ratio_re: Estimate {
                    estimate: re,
                    stderr: re_se,
                    theory: theta,
                },
                ratio_im: Estimate {
                    estimate: im,
                    stderr: im_se,
                    theory: 0.0,
                },
            })
        })
        .collect()
}

/// Mean squared error of the order-`m` chaos truncation of `log|ζ|` against
/// its prediction `Σ_{α>m} 1/(4α²)`.
pub fn log_truncation_error(seed: u64, draws: usize, m: u32) -> Result<Estimate> {
    let mut rng = stream_rng(seed, 1 << 32 | m as u64);
    let sq = (0..draws)
        .map(|_| {
            let w = complex_normal(&mut rng);
            log_m_value(w, m).map(|v| (w.norm().ln() - v).powi(2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (e, se) = mean_and_stderr(&sq);
    Ok(Estimate {
        estimate: e,
        stderr: se,
        theory: zeta_tail(2.0, m as u64 + 1) / 4.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroRow {
    pub replicate: usize,
    pub winding: Option<i64>,
    pub raw: Option<f64>,
    pub oracle: Option<usize>,
    pub near_boundary: usize,
    pub warnings: String,
}

impl ZeroRow {
    pub fn agree(&self) -> bool {
        matches!((self.winding, self.oracle), (Some(w), Some(o)) if w == o as i64)
    }

    pub fn explained(&self) -> bool {
        self.near_boundary > 0 || self.warnings.contains("possible-zero-on-curve")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZerosReport {
    pub rows: Vec<ZeroRow>,
    pub agreement: f64,
    /// Disagreements without a boundary or zero-on-curve warning.
    pub unexplained: usize,
    /// Largest `|raw/2π − round|` over warning-free replicates.
    pub max_quantization_residual: f64,
    pub mean_count: Estimate,
}

/// Compare the winding number of the circle `|z| = radius` with the root
/// count in the same disk over `m` replicates.
pub fn verify_zeros(seed: u64, m: usize, r: f64, radius: f64, tail_tol: f64, opts: &IncrementOptions) -> Result<ZerosReport> {
    if m < 2 {
        return Err(Error::validation("replicates", "need at least 2"));
    }
    let curve = Curve::circle(Complex64::new(0.0, 0.0), radius, true)?;
    let chain = RChain::single(curve);
    let domain = ZeroDomain::Disk {
        center: Complex64::new(0.0, 0.0),
        radius,
    };
    let rho = CERTIFICATION_MARGIN * radius * r;
    let rows = (0..m)
        .into_par_iter()
        .map(|k| {
            let sample = GefSample::sample(replicate_seed(seed, k as u64), rho, tail_tol)?;
            let field = sample.evaluator(r)?;
            let (winding, raw, warnings) = match winding_number(&field, &chain, opts) {
                Ok(w) => {
                    let mut names: Vec<String> = w.warnings.iter().map(|x| x.to_string()).collect();
                    names.sort();
                    names.dedup();
                    (Some(w.count), Some(w.raw), names.join(";"))
                }
                Err(Error::Numerical { partial, .. }) => (None, partial, "winding-failed".to_string()),
                Err(e) => return Err(e),
            };
            let (oracle, near_boundary) = match zero_count_oracle(&sample, &domain, r) {
                Ok(c) => (Some(c.count), c.near_boundary.len()),
                Err(Error::Numerical { .. }) => (None, 0),
                Err(e) => return Err(e),
            };
            Ok(ZeroRow {
                replicate: k,
                winding,
                raw,
                oracle,
                near_boundary,
                warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let agree = rows.iter().filter(|r| r.agree()).count();
    let unexplained = rows.iter().filter(|r| !r.agree() && !r.explained()).count();
    let max_quantization_residual = rows
        .iter()
        .filter(|r| r.warnings.is_empty() && r.winding.is_some())
        .filter_map(|r| r.raw)
        .map(|raw| (raw / TAU - (raw / TAU).round()).abs())
        .fold(0.0, f64::max);
    let counts: Vec<f64> = rows.iter().filter_map(|r| r.oracle).map(|c| c as f64).collect();
    let (mean, se) = mean_and_stderr(&counts);
    Ok(ZerosReport {
        agreement: agree as f64 / m as f64,
        unexplained,
        max_quantization_residual,
        mean_count: Estimate {
            estimate: mean,
            stderr: se,
            theory: r * r * radius * radius,
        },
        rows,
    })
}
