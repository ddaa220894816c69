//! Zero counting by simultaneous (Aberth–Ehrlich) root finding, independent
//! of phase unwrapping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::field::GefSample;

const MAX_ITERATIONS: usize = 200;
const REL_STEP: f64 = 1e-12;
/// Roots this close to the boundary (in z units) are flagged.
pub const BOUNDARY_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ZeroDomain {
    Disk { center: Complex64, radius: f64 },
    /// Axis-aligned, with corners `min` and `max`.
    Rect { min: Complex64, max: Complex64 },
}

impl ZeroDomain {
    fn validate(&self) -> Result<()> {
        match self {
            ZeroDomain::Disk { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::validation("domain.radius", "must be positive"))
            }
            ZeroDomain::Rect { min, max } if !(min.re < max.re && min.im < max.im) => {
                Err(Error::validation("domain", "rectangle needs min < max in both coordinates"))
            }
            _ => Ok(()),
        }
    }

    fn max_modulus(&self) -> f64 {
        match self {
            ZeroDomain::Disk { center, radius } => center.norm() + radius,
            ZeroDomain::Rect { min, max } => [*min, *max, Complex64::new(min.re, max.im), Complex64::new(max.re, min.im)]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max),
        }
    }

    /// (strictly inside, distance to the boundary).
    fn classify(&self, z: Complex64) -> (bool, f64) {
        match self {
            ZeroDomain::Disk { center, radius } => {
                let d = (z - center).norm();
                (d < *radius, (d - radius).abs())
            }
            ZeroDomain::Rect { min, max } => {
                let inside = min.re < z.re && z.re < max.re && min.im < z.im && z.im < max.im;
                let dx = (z.re - min.re).abs().min((z.re - max.re).abs());
                let dy = (z.im - min.im).abs().min((z.im - max.im).abs());
                let dist = if inside {
                    dx.min(dy)
                } else {
                    let ox = (min.re - z.re).max(z.re - max.re).max(0.0);
                    let oy = (min.im - z.im).max(z.im - max.im).max(0.0);
                    ox.hypot(oy)
                };
                (inside, dist)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCount {
    pub count: usize,
    /// Roots within [`BOUNDARY_WARNING`] of the boundary.
    pub near_boundary: Vec<Complex64>,
    pub iterations: usize,
}

/// Newton correction `p/p'` and whether `|p|` is at its rounding floor.
fn newton(coeffs: &[Complex64], u: Complex64) -> (Complex64, bool) {
    let degree = coeffs.len() - 1;
    let eps = f64::EPSILON * 4.0 * (degree as f64 + 1.0);
    if u.norm() <= 1.0 {
        let (mut p, mut dp, mut abs) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
        let m = u.norm();
        for c in coeffs.iter().rev() {
            dp = dp * u + p;
            p = p * u + c;
            abs = abs * m + c.norm();
        }
        (p / dp, p.norm() <= eps * abs)
    } else {
        // p(u) = u^N q(1/u) keeps the powers bounded.
        let v = u.inv();
        let m = v.norm();
        let (mut q, mut dq, mut abs) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
        for c in coeffs {
            dq = dq * v + q;
            q = q * v + c;
            abs = abs * m + c.norm();
        }
        let log_derivative = v * (degree as f64 - v * dq / q);
        (log_derivative.inv(), q.norm() <= eps * abs)
    }
}

/// All roots of `Σ coeffs[n] uⁿ` (non-zero leading coefficient).
fn aberth(coeffs: &[Complex64]) -> Result<(Vec<Complex64>, usize)> {
    let degree = coeffs.len() - 1;
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / degree as f64 + 0.4))
        .collect();
    let mut done = vec![false; degree];
    for iteration in 1..=MAX_ITERATIONS {
        for k in 0..degree {
            if done[k] {
                continue;
            }
            let (ratio, at_floor) = newton(coeffs, roots[k]);
            if at_floor || !ratio.is_finite() {
                done[k] = true;
                continue;
            }
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != k)
                .map(|j| (roots[k] - roots[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            roots[k] -= step;
            if step.norm() <= REL_STEP * roots[k].norm() {
                done[k] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return Ok((roots, iteration));
        }
    }
    Err(Error::numerical(
        "zero_count_oracle",
        format!("Aberth iteration did not converge in {MAX_ITERATIONS} iterations"),
    ))
}

/// Roots of the truncated polynomial `Σ ζ_n wⁿ/√n!`, in the w-plane.
pub fn polynomial_roots(sample: &GefSample) -> Result<Vec<Complex64>> {
    Ok(roots_with_iterations(sample)?.0)
}

fn roots_with_iterations(sample: &GefSample) -> Result<(Vec<Complex64>, usize)> {
    let coeffs = sample.coeffs();
    let Some(degree) = coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)) else {
        return Err(Error::validation("coeffs", "the zero polynomial has no isolated roots"));
    };
    if degree == 0 {
        return Ok((Vec::new(), 0));
    }
    // u = w/s with s = √N puts the root bulk near the unit circle; scaling
    // by the largest log-magnitude keeps every coefficient representable.
    let s = (degree as f64).sqrt();
    let logs: Vec<f64> = (0..=degree)
        .map(|n| n as f64 * s.ln() - 0.5 * ln_gamma(n as f64 + 1.0))
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<Complex64> = coeffs[..=degree]
        .iter()
        .zip(&logs)
        .map(|(c, l)| c * (l - top).exp())
        .collect();
    let (roots, iterations) = aberth(&scaled)?;
    Ok((roots.into_iter().map(|u| u * s).collect(), iterations))
}

/// Number of zeros of `f(R·)` strictly inside `domain`.
pub fn zero_count_oracle(sample: &GefSample, domain: &ZeroDomain, r: f64) -> Result<ZeroCount> {
    domain.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::validation("R", "must be positive"));
    }
    let modulus = r * domain.max_modulus();
    if modulus > sample.rho_max() {
        return Err(Error::Domain {
            modulus,
            rho_max: sample.rho_max(),
        });
    }
    let (roots, iterations) = roots_with_iterations(sample)?;
    let mut count = 0;
    let mut near_boundary = Vec::new();
    for w in roots {
        let z = w / r;
        let (inside, dist) = domain.classify(z);
        if inside {
            count += 1;
        }
        if dist < BOUNDARY_WARNING {
            near_boundary.push(z);
        }
    }
    Ok(ZeroCount {
        count,
        near_boundary,
        iterations,
    })
}
