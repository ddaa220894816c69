//! Closed-form chaos quantities: log-modulus covariance, Wick powers,
//! Laguerre coefficients and the diagram formula.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{factorial, EULER_GAMMA};

pub use crate::special::{dilog, limit_constant, zeta_three_halves};

/// Largest total Wick order `Σα` the diagram enumeration accepts.
pub const DIAGRAM_BUDGET: u32 = 10;

/// `cov(log|ζ₁|, log|ζ₂|) = dl(|θ|²)/4` for standard complex Gaussians with
/// correlation `θ`.
pub fn cov_loglog(theta: Complex64) -> Result<f64> {
    let m2 = theta.norm_sqr();
    if !(m2 <= 1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::validation("theta", format!("|theta| must not exceed 1, got {}", m2.sqrt())));
    }
    Ok(dilog(m2.min(1.0))? / 4.0)
}

/// `E[log|ζ|] = −γ/2`.
pub fn mean_log() -> f64 {
    -0.5 * EULER_GAMMA
}

/// `c_α = (−1)^{α+1}/(2α)`.
pub fn wick_coeff(alpha: u32) -> Result<f64> {
    if alpha < 1 {
        return Err(Error::validation("alpha", "must be at least 1"));
    }
    let sign = if alpha % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign / (2.0 * alpha as f64))
}

/// Laguerre polynomial normalised as `α!·L_α` (so `L_1(x) = 1 − x` and
/// `:|ζ|^{2α}: = (−1)^α L_α(|ζ|²)`), via
/// `L_{n+1} = (2n+1−x)L_n − n²L_{n−1}`.
pub fn laguerre(alpha: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if alpha == 0 {
        return prev;
    }
    for n in 1..alpha {
        let nf = n as f64;
        let next = (2.0 * nf + 1.0 - x) * cur - nf * nf * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `:|ζ|^{2α}:` evaluated at `|ζ|² = x`.
pub fn wick_power(alpha: u32, x: f64) -> f64 {
    if alpha % 2 == 0 {
        laguerre(alpha, x)
    } else {
        -laguerre(alpha, x)
    }
}

/// Chaos expansion of `log|w|` truncated at order `m`:
/// `−γ/2 + Σ_{α≤m} (c_α/α!)·:|w|^{2α}:`.
///
/// Evaluated with the unit-normalised Laguerre recurrence, since the
/// `α!`-scaled polynomials overflow long before the terms do.
pub fn log_m_value(w: Complex64, m: u32) -> Result<f64> {
    if m < 1 {
        return Err(Error::validation("m", "must be at least 1"));
    }
    let x = w.norm_sqr();
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    let mut sum = mean_log();
    for alpha in 1..=m {
        if alpha > 1 {
            let n = (alpha - 1) as f64;
            let next = ((2.0 * n + 1.0 - x) * cur - n * prev) / (n + 1.0);
            prev = cur;
            cur = next;
        }
        // c_α (−1)^α = −1/(2α) for every α.
        sum -= cur / (2.0 * alpha as f64);
    }
    Ok(sum)
}

/// `E[:|ζ₁|^{2α_i}: :|ζ₂|^{2α_j}:] = (α_i!)²|θ|^{2α_i}` when the orders
/// agree, zero otherwise.
pub fn wick_pair_expectation(alpha_i: u32, alpha_j: u32, theta: Complex64) -> f64 {
    if alpha_i != alpha_j {
        return 0.0;
    }
    let f = factorial(alpha_i);
    f * f * theta.norm_sqr().powi(alpha_i as i32)
}

/// Normalised covariance kernel `K̂_R(z, w) = E[f̂_R(z) conj f̂_R(w)]`.
pub fn kernel_hat(z: Complex64, w: Complex64, r: f64) -> Complex64 {
    let r2 = r * r;
    (r2 * (z * w.conj() - 0.5 * z.norm_sqr() - 0.5 * w.norm_sqr())).exp()
}

/// `E[Π_r :f̂_R(z_r)^{α_r} conj(f̂_R(z_r))^{α_r}:]` as the sum over all
/// diagrams: perfect matchings of the `α_r` unbarred copies of each label
/// with the barred copies, never joining `r` to `r̄`, each valued
/// `Π K̂_R(z_r, z_s)`.
pub fn diagram_sum(points: &[Complex64], alphas: &[u32], r: f64) -> Result<Complex64> {
    if points.len() != alphas.len() {
        return Err(Error::validation("alphas", "needs one order per point"));
    }
    if points.is_empty() {
        return Err(Error::validation("points", "at least one point is required"));
    }
    let total: u32 = alphas.iter().sum();
    if total > DIAGRAM_BUDGET {
        return Err(Error::validation(
            "alphas",
            format!("total order {total} exceeds the enumeration budget {DIAGRAM_BUDGET}"),
        ));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::validation("R", "must be positive"));
    }
    let p = points.len();
    let kernel: Vec<Vec<Complex64>> = points
        .iter()
        .map(|z| points.iter().map(|w| kernel_hat(*z, *w, r)).collect())
        .collect();
    // Unbarred vertices in label order; only the barred capacities vary.
    let labels: Vec<usize> = (0..p).flat_map(|k| std::iter::repeat(k).take(alphas[k] as usize)).collect();
    let capacity: Vec<u8> = alphas.iter().map(|&a| a as u8).collect();
    let mut memo = HashMap::new();
    Ok(match_from(0, capacity, &labels, &kernel, &mut memo))
}

fn match_from(
    pos: usize,
    capacity: Vec<u8>,
    labels: &[usize],
    kernel: &[Vec<Complex64>],
    memo: &mut HashMap<(usize, Vec<u8>), Complex64>,
) -> Complex64 {
    if pos == labels.len() {
        return Complex64::new(1.0, 0.0);
    }
    if let Some(v) = memo.get(&(pos, capacity.clone())) {
        return *v;
    }
    let r = labels[pos];
    let mut total = Complex64::new(0.0, 0.0);
    for s in 0..capacity.len() {
        if s == r || capacity[s] == 0 {
            continue;
        }
        let copies = capacity[s] as f64;
        let mut rest = capacity.clone();
        rest[s] -= 1;
        total += kernel[r][s] * copies * match_from(pos + 1, rest, labels, kernel, memo);
    }
    memo.insert((pos, capacity), total);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn loglog_examples() {
        assert_eq!(cov_loglog(Complex64::new(0.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(cov_loglog(Complex64::new(1.0, 0.0)).unwrap(), PI * PI / 24.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cov_loglog(Complex64::new(0.0, 0.8)).unwrap(), 0.790_026_024_347_134_5 / 4.0, epsilon = 1e-12);
        assert!(cov_loglog(Complex64::new(0.9, 0.9)).is_err());
        assert_abs_diff_eq!(mean_log(), -0.288_607_832_450_766_4, epsilon = 1e-15);
    }

    #[test]
    fn wick_coefficients() {
        assert_eq!(wick_coeff(1).unwrap(), 0.5);
        assert_eq!(wick_coeff(2).unwrap(), -0.25);
        assert!(wick_coeff(0).is_err());
    }

    #[test]
    fn laguerre_low_orders() {
        for x in [0.0, 0.3, 1.7, 5.0] {
            assert_eq!(laguerre(1, x), 1.0 - x);
            assert_abs_diff_eq!(wick_power(1, x), x - 1.0, epsilon = 0.0);
            // 2!·L_2 = x² − 4x + 2.
            assert_abs_diff_eq!(laguerre(2, x), x * x - 4.0 * x + 2.0, epsilon = 1e-13);
            // 3!·L_3 = −x³ + 9x² − 18x + 6.
            assert_abs_diff_eq!(laguerre(3, x), -x * x * x + 9.0 * x * x - 18.0 * x + 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_m_matches_scaled_laguerre() {
        let w = Complex64::new(0.7, -0.4);
        let x = w.norm_sqr();
        for m in [1, 2, 5, 9] {
            let direct: f64 = mean_log()
                + (1..=m)
                    .map(|a| wick_coeff(a).unwrap() / factorial(a) * wick_power(a, x))
                    .sum::<f64>();
            assert_abs_diff_eq!(log_m_value(w, m).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_m_converges_to_log() {
        let w = Complex64::new(0.9, 0.6);
        let err = |m| (log_m_value(w, m).unwrap() - w.norm().ln()).abs();
        assert!(err(400) < err(20));
        assert!(err(4000) < 5e-3);
    }

    #[test]
    fn pair_expectations() {
        assert_eq!(wick_pair_expectation(1, 1, Complex64::new(0.5, 0.0)), 0.25);
        assert_eq!(wick_pair_expectation(2, 3, Complex64::new(0.5, 0.1)), 0.0);
        assert_eq!(wick_pair_expectation(2, 2, Complex64::new(1.0, 0.0)), 4.0);
    }

    #[test]
    fn diagram_small_cases() {
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.1), Complex64::new(-0.1, 0.3)];
        let r = 2.0;
        let k = |i: usize, j: usize| kernel_hat(pts[i], pts[j], r);
        let d = diagram_sum(&pts[..2], &[1, 1], r).unwrap();
        assert_abs_diff_eq!(d.re, k(0, 1).norm_sqr(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-15);
        for a in 1..=3 {
            let d = diagram_sum(&pts[..2], &[a, a], r).unwrap();
            let expected = wick_pair_expectation(a, a, k(0, 1));
            assert!((d.re - expected).abs() <= 1e-12 * expected);
            assert_eq!(diagram_sum(&pts[..2], &[a, a + 1], r).unwrap(), Complex64::new(0.0, 0.0));
        }
        let d = diagram_sum(&pts, &[1, 1, 1], r).unwrap();
        let expected = 2.0 * (k(0, 1) * k(1, 2) * k(2, 0)).re;
        assert_abs_diff_eq!(d.re, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-14);
        assert_eq!(diagram_sum(&pts, &[3, 1, 1], r).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn diagram_budget() {
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(0.1, 0.0)];
        assert!(diagram_sum(&pts, &[5, 6], 1.0).unwrap_err().is_validation());
        assert!(diagram_sum(&pts, &[1], 1.0).is_err());
    }
}
