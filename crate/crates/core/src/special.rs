//! Special functions and constants used by the covariance predictions.

use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

use crate::error::{Error, Result};

/// The dilogarithm `Σ_{k≥1} x^k / k²` on `[0, 1]`.
///
/// Above one half the reflection `Li₂(x) = π²/6 − ln x ln(1−x) − Li₂(1−x)` is
/// used so the series argument never exceeds ½.
pub fn dilog(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation("x", format!("dilog needs 0 <= x <= 1, got {x}")));
    }
    if x == 1.0 {
        return Ok(PI * PI / 6.0);
    }
    if x > 0.5 {
        let y = 1.0 - x;
        return Ok(PI * PI / 6.0 - x.ln() * y.ln() - dilog_series(y));
    }
    Ok(dilog_series(x))
}

fn dilog_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = x;
    let mut k = 1.0;
    while power > 1e-18 * k * k {
        sum += power / (k * k);
        power *= x;
        k += 1.0;
    }
    sum
}

/// `Σ_{k≥n} k^{−s}` for `s > 1`, `n ≥ 1`: direct sum up to a cutoff, then
/// Euler–Maclaurin with three Bernoulli corrections.
pub fn zeta_tail(s: f64, n: u64) -> f64 {
    debug_assert!(s > 1.0 && n >= 1);
    const CUTOFF: u64 = 64;
    let mut sum = 0.0;
    let mut k = n;
    while k < CUTOFF {
        sum += (k as f64).powf(-s);
        k += 1;
    }
    let m = k as f64;
    // Σ_{k≥m} k^{-s} = m^{1-s}/(s-1) + m^{-s}/2 + Σ_j B_{2j}/(2j)! (s)_{2j-1} m^{-s-2j+1}
    let mut em = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    em += s / 12.0 * m.powf(-s - 1.0);
    em -= s * (s + 1.0) * (s + 2.0) / 720.0 * m.powf(-s - 3.0);
    em += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * m.powf(-s - 5.0);
    // smallest terms first
    em + sum
}

/// ζ(3/2).
pub fn zeta_three_halves() -> f64 {
    zeta_tail(1.5, 1)
}

/// The constant `√π/2 · ζ(3/2)` relating the variance of the increment to
/// `R` times the signed length.
pub fn limit_constant() -> f64 {
    0.5 * PI.sqrt() * zeta_three_halves()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Correctly rounded sum of a sequence of floats, independent of order.
///
/// Shewchuk's exact partials followed by a half-way-aware final rounding.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dilog_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(dilog(1.0).unwrap(), 1.644_934_066_848_226_4, epsilon = 1e-15);
        assert_abs_diff_eq!(dilog(0.5).unwrap(), 0.582_240_526_465_012_5, epsilon = 1e-13);
        let ln2 = std::f64::consts::LN_2;
        assert_abs_diff_eq!(dilog(0.5).unwrap(), PI * PI / 12.0 - ln2 * ln2 / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(dilog(0.64).unwrap(), 0.790_026_024_347_134_5, epsilon = 1e-12);
        assert_abs_diff_eq!(dilog(0.09).unwrap(), 0.092_110_352_631_786_33, epsilon = 1e-13);
    }

    #[test]
    fn dilog_rejects_out_of_range() {
        assert!(dilog(-0.1).is_err());
        assert!(dilog(1.0 + 1e-12).is_err());
        assert!(dilog(f64::NAN).is_err());
    }

    #[test]
    fn dilog_near_one_is_continuous() {
        let below = dilog(1.0 - 1e-12).unwrap();
        assert!((below - PI * PI / 6.0).abs() < 1e-9);
    }

    #[test]
    fn zeta_and_limit_constant() {
        assert_abs_diff_eq!(zeta_three_halves(), 2.612_375_348_685_488_3, epsilon = 1e-12);
        assert_abs_diff_eq!(limit_constant(), 2.315_157_373_394_117, epsilon = 1e-12);
        assert_abs_diff_eq!(
            limit_constant() / (0.5 * PI.sqrt()),
            zeta_three_halves(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zeta_tail_matches_direct_partial_sums() {
        let total = zeta_tail(2.5, 1);
        let head: f64 = (1..10).map(|k| (k as f64).powf(-2.5)).sum();
        assert_abs_diff_eq!(total - head, zeta_tail(2.5, 10), epsilon = 1e-14);
        assert_abs_diff_eq!(zeta_tail(2.0, 1), PI * PI / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_sum_is_order_free() {
        let v = [1e16, 1.0, -1e16, 3.5, 1e-3, -2.25];
        let mut w = v;
        w.reverse();
        assert_eq!(exact_sum(v), exact_sum(w));
        assert_eq!(exact_sum(v), 2.251);
        assert_eq!(exact_sum(v.iter().map(|x| -x)), -exact_sum(v));
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-16);
        // statrs' erfc is accurate to roughly 1e-12 here.
        assert_abs_diff_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-11);
        assert_abs_diff_eq!(normal_cdf(-3.0), 0.001_349_898_031_630_094_5, epsilon = 1e-13);
    }
}
