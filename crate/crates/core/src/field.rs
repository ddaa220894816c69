//! Sampling and evaluation of the Gaussian entire function
//! `f(z) = Σ ζ_n zⁿ / √n!` on a disk of certified radius.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_normal, stream_rng};

/// Largest radius the pre-scaled recurrence supports: beyond it
/// `e^{−ρ²/2}` underflows.
pub const MAX_RHO: f64 = 37.0;

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// Smallest `N` with `e^{−ρ²} Σ_{n>N} ρ^{2n}/n! ≤ tol²` at `ρ = rho_max`.
///
/// The Poisson weights are generated by the log-space recurrence
/// `ln p_n = ln p_{n−1} + 2 ln ρ − ln n` and the tail is summed directly,
/// smallest terms first, so the comparison with `tol²` never suffers from
/// cancellation against the head.
pub fn truncation_order(rho_max: f64, tol: f64) -> Result<usize> {
    if !tol.is_finite() || tol <= 0.0 || tol >= 1.0 {
        return Err(Error::validation("tail_tol", format!("must lie in (0, 1), got {tol}")));
    }
    if !rho_max.is_finite() || rho_max < 0.0 {
        return Err(Error::validation("rho_max", format!("must be finite and >= 0, got {rho_max}")));
    }
    if rho_max > MAX_RHO {
        return Err(Error::NumericalRange(format!(
            "rho_max = {rho_max} exceeds {MAX_RHO}; e^(-rho^2/2) underflows"
        )));
    }
    if rho_max == 0.0 {
        return Ok(0);
    }
    let target = tol * tol;
    let rho2 = rho_max * rho_max;
    let log_rho2 = rho2.ln();
    let mut log_p = -rho2;
    let mut weights = vec![log_p.exp()];
    let mut n = 0usize;
    loop {
        n += 1;
        log_p += log_rho2 - (n as f64).ln();
        let p = log_p.exp();
        weights.push(p);
        // past the mode the remaining tail is dominated by a geometric series
        if (n as f64) > rho2 && p < 1e-40 * target {
            break;
        }
    }
    let last = weights.len() - 1;
    let ratio = rho2 / (last as f64 + 1.0);
    let mut tail = weights[last] * ratio / (1.0 - ratio);
    // tail_after[k] = Σ_{j>k} p_j
    let mut order = last;
    for k in (0..last).rev() {
        tail += weights[k + 1];
        if tail > target {
            break;
        }
        order = k;
    }
    Ok(order)
}

/// `e^{−ρ²} Σ_{n>order} ρ^{2n}/n!`, the variance of the discarded tail of
/// `f̂` at radius `ρ`.
pub fn truncation_tail(rho: f64, order: usize) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let rho2 = rho * rho;
    let mut log_p = -rho2;
    let log_rho2 = rho2.ln();
    for n in 1..=order + 1 {
        log_p += log_rho2 - (n as f64).ln();
    }
    let mut terms = Vec::new();
    let mut n = order + 1;
    loop {
        let p = log_p.exp();
        terms.push(p);
        if (n as f64) > rho2 && p < 1e-40 * terms[0].max(f64::MIN_POSITIVE) {
            break;
        }
        n += 1;
        log_p += log_rho2 - (n as f64).ln();
    }
    terms.iter().rev().sum()
}

/// A truncated realisation of the Gaussian entire function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GefSample {
    pub seed: u64,
    coeffs: Vec<Complex64>,
    rho_max: f64,
    /// Relative L² truncation tolerance; zero when the coefficients describe
    /// an exact polynomial.
    tail_tol: f64,
    #[serde(skip)]
    inv_sqrt: Vec<f64>,
}

impl GefSample {
    /// Draw ζ_0..ζ_N from the counter stream keyed by `(seed, n)`.
    pub fn sample(seed: u64, rho_max: f64, tail_tol: f64) -> Result<Self> {
        let order = truncation_order(rho_max, tail_tol)?;
        let coeffs = (0..=order as u64)
            .map(|n| complex_normal(&mut stream_rng(seed, n)))
            .collect();
        Ok(Self::build(seed, coeffs, rho_max, tail_tol))
    }

    /// Exact polynomial `Σ c_n wⁿ/√n!`, certified on `|w| ≤ rho_max`.
    pub fn from_coefficients(coeffs: Vec<Complex64>, rho_max: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::validation("coeffs", "at least one coefficient is required"));
        }
        if !(0.0..=MAX_RHO).contains(&rho_max) {
            return Err(Error::validation("rho_max", format!("must lie in [0, {MAX_RHO}]")));
        }
        Ok(Self::build(0, coeffs, rho_max, 0.0))
    }

    fn build(seed: u64, coeffs: Vec<Complex64>, rho_max: f64, tail_tol: f64) -> Self {
        let inv_sqrt = (0..coeffs.len())
            .map(|n| if n == 0 { 1.0 } else { 1.0 / (n as f64).sqrt() })
            .collect();
        Self {
            seed,
            coeffs,
            rho_max,
            tail_tol,
            inv_sqrt,
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// `f̂(w) = e^{−|w|²/2} Σ_{n≤N} ζ_n wⁿ/√n!`.
    ///
    /// The Gaussian factor seeds the term recurrence `t_n = t_{n−1} w/√n`,
    /// so every partial term stays O(1) for `|w| ≤ 37`.
    pub fn eval_hat(&self, w: Complex64) -> Result<Complex64> {
        let modulus = w.norm();
        // Slack of a few ulps so curves lying exactly on the certified
        // circle are not rejected over rounding in their parametrisation.
        if !(modulus <= self.rho_max * (1.0 + 1e-12)) {
            return Err(Error::Domain {
                modulus,
                rho_max: self.rho_max,
            });
        }
        let mut term = Complex64::new((-0.5 * w.norm_sqr()).exp(), 0.0);
        let mut sum = self.coeffs[0] * term;
        for (c, s) in self.coeffs.iter().zip(&self.inv_sqrt).skip(1) {
            term *= w * *s;
            sum += c * term;
        }
        Ok(sum)
    }

    /// `z ↦ f̂_R(z) = f̂(Rz)`.
    pub fn evaluator(&self, r: f64) -> Result<FieldEvaluator<'_>> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::validation("R", format!("must be positive, got {r}")));
        }
        Ok(FieldEvaluator { sample: self, r })
    }

    /// Write `n,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "re", "im"])?;
        for (n, c) in self.coeffs.iter().enumerate() {
            w.write_record([n.to_string(), format_real(c.re), format_real(c.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draw a sample; see [`GefSample::sample`].
pub fn sample_gef(seed: u64, rho_max: f64, tail_tol: f64) -> Result<GefSample> {
    GefSample::sample(seed, rho_max, tail_tol)
}

/// Fixed 17-significant-digit formatting used by every CSV writer.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Something that can be evaluated along a curve.
///
/// `length_scale` is the inverse correlation length; the phase unwrapper
/// starts from `ceil(10 · scale · length)` intervals.
pub trait Field {
    fn value(&self, z: Complex64) -> Result<Complex64>;

    fn length_scale(&self) -> f64 {
        1.0
    }
}

impl<F> Field for F
where
    F: Fn(Complex64) -> Complex64,
{
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self(z))
    }
}

/// The normalised field `f̂_R`. Its phase equals that of `f(Rz)`.
#[derive(Debug, Clone, Copy)]
pub struct FieldEvaluator<'a> {
    sample: &'a GefSample,
    r: f64,
}

impl FieldEvaluator<'_> {
    pub fn scale(&self) -> f64 {
        self.r
    }
}

impl Field for FieldEvaluator<'_> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        self.sample.eval_hat(z * self.r)
    }

    fn length_scale(&self) -> f64 {
        self.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_radius_needs_one_coefficient() {
        assert_eq!(truncation_order(0.0, 1e-8).unwrap(), 0);
    }

    #[test]
    fn tolerance_is_validated() {
        assert!(matches!(truncation_order(1.0, 0.0), Err(Error::Validation { .. })));
        assert!(matches!(truncation_order(1.0, 1.0), Err(Error::Validation { .. })));
        assert!(matches!(truncation_order(38.0, 1e-8), Err(Error::NumericalRange(_))));
    }

    #[test]
    fn order_grows_with_radius() {
        for tol in [1e-3, 1e-8, 1e-12] {
            assert!(truncation_order(10.0, tol).unwrap() >= truncation_order(5.0, tol).unwrap());
        }
    }

    #[test]
    fn certificate_holds_and_is_tight() {
        for &(rho, tol) in &[(1.0, 1e-8), (8.0, 1e-8), (16.32, 1e-8), (3.0, 0.5), (30.0, 1e-6)] {
            let n = truncation_order(rho, tol).unwrap();
            assert!(truncation_tail(rho, n) <= tol * tol);
            assert!(truncation_tail(rho, n - 1) > tol * tol);
        }
    }

    #[test]
    fn single_term_series() {
        let s = GefSample::from_coefficients(vec![Complex64::new(1.0, 0.0)], 5.0).unwrap();
        let w = Complex64::new(1.2, -0.7);
        let v = s.eval_hat(w).unwrap();
        assert_abs_diff_eq!(v.re, (-0.5 * w.norm_sqr()).exp(), epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn linear_term() {
        let s = GefSample::from_coefficients(vec![0.0.into(), 1.0.into()], 5.0).unwrap();
        let v = s.eval_hat(Complex64::new(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 2.0 * (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn outside_certified_disk_is_rejected() {
        let s = sample_gef(1, 4.0, 1e-8).unwrap();
        assert!(matches!(s.eval_hat(Complex64::new(4.0, 0.1)), Err(Error::Domain { .. })));
        let e = s.evaluator(2.0).unwrap();
        assert!(e.value(Complex64::new(1.0, 0.0)).is_ok());
        assert!(e.value(Complex64::new(2.1, 0.0)).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_gef(99, 6.0, 1e-8).unwrap();
        let b = sample_gef(99, 6.0, 1e-8).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        assert_ne!(a.coeffs(), sample_gef(100, 6.0, 1e-8).unwrap().coeffs());
        assert_eq!(a.truncation_order(), truncation_order(6.0, 1e-8).unwrap());
    }

    #[test]
    fn phase_matches_unscaled_series() {
        let coeffs = vec![
            Complex64::new(0.3, -1.1),
            Complex64::new(-0.8, 0.4),
            Complex64::new(1.5, 0.2),
        ];
        let s = GefSample::from_coefficients(coeffs.clone(), 10.0).unwrap();
        let r = 2.5;
        let e = s.evaluator(r).unwrap();
        for z in [Complex64::new(0.3, 0.4), Complex64::new(-1.1, 0.9), Complex64::new(0.0, -2.0)] {
            let w = z * r;
            let direct = coeffs[0] + coeffs[1] * w + coeffs[2] * w * w / 2f64.sqrt();
            let d = (e.value(z).unwrap() * direct.conj()).arg();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let s = sample_gef(3, 2.0, 1e-8).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,re,im"));
        assert_eq!(lines.count(), s.coeffs().len());
    }
}
