//! Increment of the argument by adaptive phase unwrapping.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, GefSample};
use crate::geometry::{Curve, RChain, DEFAULT_GEO_TOL};
use crate::special::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncrementOptions {
    /// Largest accepted phase change per step, in (0, π).
    pub theta_max: f64,
    /// Smallest parameter step refinement may produce.
    pub min_param_step: f64,
    /// Moduli below this force refinement.
    pub zero_floor: f64,
    pub max_depth: u32,
}

impl Default for IncrementOptions {
    fn default() -> Self {
        Self {
            theta_max: PI / 4.0,
            min_param_step: 1e-8,
            zero_floor: 1e-6,
            max_depth: 40,
        }
    }
}

impl IncrementOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_max > 0.0 && self.theta_max < PI) {
            return Err(Error::validation("theta_max", "must lie strictly between 0 and π"));
        }
        if !(self.min_param_step > 0.0 && self.min_param_step < 1.0) {
            return Err(Error::validation("min_param_step", "must lie in (0, 1)"));
        }
        if !(self.zero_floor > 0.0 && self.zero_floor.is_finite()) {
            return Err(Error::validation("zero_floor", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IncrementWarning {
    /// A step could not be refined while the modulus stayed below the floor.
    PossibleZeroOnCurve { t: f64, modulus: f64 },
    /// A step still exceeded `theta_max` at the refinement limit.
    RefinementFloor { t: f64, phase_step: f64 },
}

impl IncrementWarning {
    pub fn is_zero_on_curve(&self) -> bool {
        matches!(self, IncrementWarning::PossibleZeroOnCurve { .. })
    }
}

impl fmt::Display for IncrementWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IncrementWarning::PossibleZeroOnCurve { .. } => f.write_str("possible-zero-on-curve"),
            IncrementWarning::RefinementFloor { .. } => f.write_str("refinement-floor-hit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementResult {
    /// Radians.
    pub value: f64,
    pub evaluations: usize,
    pub min_modulus: f64,
    pub warnings: Vec<IncrementWarning>,
}

impl IncrementResult {
    pub fn has_zero_warning(&self) -> bool {
        self.warnings.iter().any(IncrementWarning::is_zero_on_curve)
    }
}

fn evaluate<F: Field + ?Sized>(field: &F, curve: &Curve, t: f64, count: &mut usize) -> Result<Complex64> {
    let w = field.value(curve.point_at(t))?;
    *count += 1;
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::numerical(
            "increment_curve",
            format!("field is not finite at parameter {t}"),
        ));
    }
    Ok(w)
}

/// Total change of `arg field` along `curve`.
///
/// Steps of the parameter partition are bisected until each phase change is
/// at most `theta_max` and both end moduli are at least `zero_floor`. The
/// result is exact as long as every accepted step's true phase change is
/// below π. The field must be holomorphic-like: poles are not supported.
pub fn increment_curve<F: Field + ?Sized>(field: &F, curve: &Curve, opts: &IncrementOptions) -> Result<IncrementResult> {
    opts.validate()?;
    let n0 = (10.0 * field.length_scale() * curve.length()).ceil().max(1.0) as usize;
    let mut evaluations = 0;
    let mut steps = Vec::with_capacity(n0);
    let mut warnings = Vec::new();

    let mut t0 = 0.0;
    let mut w0 = evaluate(field, curve, t0, &mut evaluations)?;
    let mut min_modulus = w0.norm();
    // Right-hand sub-intervals wait on the stack so steps are taken in order.
    let mut stack: Vec<(f64, Complex64, u32)> = Vec::new();
    for k in (1..=n0).rev() {
        let t = if k == n0 { 1.0 } else { k as f64 / n0 as f64 };
        let w = evaluate(field, curve, t, &mut evaluations)?;
        stack.push((t, w, 0));
    }
    while let Some((t1, w1, depth)) = stack.pop() {
        min_modulus = min_modulus.min(w1.norm());
        let step = (w1 * w0.conj()).arg();
        let small = w0.norm() < opts.zero_floor || w1.norm() < opts.zero_floor;
        if step.abs() <= opts.theta_max && !small {
            steps.push(step);
            t0 = t1;
            w0 = w1;
            continue;
        }
        let half = 0.5 * (t1 - t0);
        if depth < opts.max_depth && half >= opts.min_param_step {
            let tm = t0 + half;
            let wm = evaluate(field, curve, tm, &mut evaluations)?;
            stack.push((t1, w1, depth + 1));
            stack.push((tm, wm, depth + 1));
            continue;
        }
        if small {
            warnings.push(IncrementWarning::PossibleZeroOnCurve {
                t: t0,
                modulus: w0.norm().min(w1.norm()),
            });
        } else {
            warnings.push(IncrementWarning::RefinementFloor { t: t0, phase_step: step });
        }
        steps.push(step);
        t0 = t1;
        w0 = w1;
    }
    Ok(IncrementResult {
        value: exact_sum(steps),
        evaluations,
        min_modulus,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainIncrement {
    /// `Σ aᵢ Δ_R(Γᵢ)`.
    pub raw: f64,
    /// `raw − E[Δ_R]`.
    pub centered: f64,
    pub per_curve: Vec<IncrementResult>,
}

impl ChainIncrement {
    pub fn warnings(&self) -> impl Iterator<Item = &IncrementWarning> {
        self.per_curve.iter().flat_map(|r| r.warnings.iter())
    }

    pub fn has_zero_warning(&self) -> bool {
        self.per_curve.iter().any(IncrementResult::has_zero_warning)
    }

    pub fn min_modulus(&self) -> f64 {
        self.per_curve.iter().map(|r| r.min_modulus).fold(f64::INFINITY, f64::min)
    }
}

fn combine<F: Field + ?Sized>(field: &F, chain: &RChain, opts: &IncrementOptions) -> Result<(f64, Vec<IncrementResult>)> {
    let per_curve = chain
        .terms()
        .iter()
        .map(|(_, c)| increment_curve(field, c, opts))
        .collect::<Result<Vec<_>>>()?;
    let raw = exact_sum(chain.terms().iter().zip(&per_curve).map(|((a, _), r)| a * r.value));
    Ok((raw, per_curve))
}

/// Increment of `arg f(R·)` along a chain, raw and centred by its mean.
pub fn increment_chain(sample: &GefSample, chain: &RChain, r: f64, opts: &IncrementOptions) -> Result<ChainIncrement> {
    let field = sample.evaluator(r)?;
    let modulus = r * chain.max_modulus();
    if modulus > sample.rho_max() {
        return Err(Error::Domain {
            modulus,
            rho_max: sample.rho_max(),
        });
    }
    let (raw, per_curve) = combine(&field, chain, opts)?;
    Ok(ChainIncrement {
        raw,
        centered: raw - chain.mean_increment(r),
        per_curve,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingNumber {
    pub count: i64,
    pub raw: f64,
    pub warnings: Vec<IncrementWarning>,
}

/// `Δ/2π` for a closed chain, rounded. Fails when the increment is more
/// than 10⁻³ turns from an integer, which signals a zero too near the curve.
pub fn winding_number<F: Field + ?Sized>(field: &F, chain: &RChain, opts: &IncrementOptions) -> Result<WindingNumber> {
    if !chain.is_closed(DEFAULT_GEO_TOL * chain.max_modulus().max(1.0)) {
        return Err(Error::validation("chain", "winding number needs a closed chain"));
    }
    let (raw, per_curve) = combine(field, chain, opts)?;
    let turns = raw / TAU;
    let count = turns.round();
    if (turns - count).abs() > 1e-3 {
        return Err(Error::Numerical {
            op: "winding_number",
            reason: format!("increment is {turns} turns, not near an integer; a zero may lie on the curve"),
            partial: Some(raw),
        });
    }
    Ok(WindingNumber {
        count: count as i64,
        raw,
        warnings: per_curve.into_iter().flat_map(|r| r.warnings).collect(),
    })
}
