//! Finite-R covariance of increments by panel quadrature, and the
//! asymptotic prediction.
//!
//! `cov(Δ_R(A), Δ_R(B)) = ¼ Σ_α α⁻² ∬ e^{−a|Δ|²}(2a⟨n̂ᵢ,n̂ⱼ⟩ − 4a²⟨n̂ᵢ,Δ⟩⟨n̂ⱼ,Δ⟩)`
//! with `a = αR²` and `Δ = zⱼ − zᵢ`. Each α-term is a smooth Gaussian
//! integral; only their sum is singular on the diagonal, so terms are
//! integrated separately and the slowly decaying α-tail (∝ α^{−3/2}) is
//! extrapolated from the computed terms.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{signed_length, Curve, Piece, RChain, DEFAULT_GEO_TOL};
use crate::quadrature::gk15_nodes;
use crate::special::{exact_sum, limit_constant, zeta_tail};

/// Panel pairs farther apart than `√(X_CUT/a)` are skipped (`e^{−50}`).
const X_CUT: f64 = 50.0;
const MIN_ALPHA: u32 = 16;
/// Pair integrals are split while |Kronrod − Gauss| exceeds this fraction
/// of the pair's natural scale `a·hᵢ·hⱼ`.
const PAIR_REL_TOL: f64 = 1e-7;
const MAX_SPLIT_DEPTH: u32 = 8;
/// When contributions cancel, accuracy is judged against this fraction of
/// their absolute magnitude instead of the (near-zero) value.
const CANCELLATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovOptions {
    /// Target for `bound / |value|`.
    pub tol: f64,
    /// Largest number of α-terms before giving up.
    pub max_alpha: u32,
    /// Integrand evaluations allowed over the whole computation.
    pub max_evaluations: u64,
}

impl Default for CovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_alpha: 4096,
            max_evaluations: 20_000_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    /// Computed terms plus the extrapolated α-tail.
    pub value: f64,
    /// Quadrature error estimate plus the tail-model uncertainty.
    pub bound: f64,
    pub alpha_terms: u32,
    pub evaluations: u64,
    /// The computed α-terms, `terms[α−1]`.
    pub terms: Vec<f64>,
    /// The extrapolated remainder `Σ_{α>A}`.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    weight: f64,
    piece: usize,
    s0: f64,
    s1: f64,
    mid: Complex64,
    half: f64,
}

fn panels(pieces: &[(f64, Piece)], h: f64) -> Vec<Panel> {
    let mut out = Vec::new();
    for (k, (weight, piece)) in pieces.iter().enumerate() {
        let len = piece.length();
        let n = (len / h).ceil().max(1.0) as usize;
        for j in 0..n {
            let s0 = len * j as f64 / n as f64;
            let s1 = len * (j + 1) as f64 / n as f64;
            out.push(Panel {
                weight: *weight,
                piece: k,
                s0,
                s1,
                mid: piece.point(0.5 * (s0 + s1)),
                half: 0.5 * (s1 - s0),
            });
        }
    }
    out
}

/// Weighted pieces, with identical pieces merged so that chains such as
/// `2Γ − Γ − Γ` cancel exactly.
fn flatten(chain: &RChain) -> Vec<(f64, Piece)> {
    let mut out: Vec<(f64, Piece)> = Vec::new();
    for (w, c) in chain.terms() {
        for p in c.pieces() {
            match out.iter_mut().find(|(_, q)| *q == p) {
                Some(entry) => entry.0 += w,
                None => out.push((*w, p)),
            }
        }
    }
    out.retain(|(w, _)| *w != 0.0);
    out
}

struct Frame {
    z: Complex64,
    n: Complex64,
    wk: f64,
    wg: f64,
}

fn frames(piece: &Piece, s0: f64, s1: f64) -> [Frame; 15] {
    gk15_nodes(s0, s1).map(|node| {
        let (z, n) = piece.frame(node.x);
        Frame {
            z,
            n,
            wk: node.wk,
            wg: node.wg,
        }
    })
}

fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// `∬ e^{−a|Δ|²}(2a⟨nᵢ,nⱼ⟩ − 4a²⟨nᵢ,Δ⟩⟨nⱼ,Δ⟩)` over a panel pair, with
/// error estimate; returns (value, error, evaluations).
fn pair_integral(a: f64, p: &Piece, (p0, p1): (f64, f64), q: &Piece, (q0, q1): (f64, f64), depth: u32) -> (f64, f64, u64) {
    let fp = frames(p, p0, p1);
    let fq = frames(q, q0, q1);
    let (mut k, mut g) = (0.0, 0.0);
    for u in &fp {
        let (mut row_k, mut row_g) = (0.0, 0.0);
        for v in &fq {
            let d = v.z - u.z;
            let f = (-a * d.norm_sqr()).exp() * (2.0 * a * dot(u.n, v.n) - 4.0 * a * a * dot(u.n, d) * dot(v.n, d));
            row_k += v.wk * f;
            row_g += v.wg * f;
        }
        k += u.wk * row_k;
        g += u.wg * row_g;
    }
    let err = (k - g).abs();
    let scale = a * (p1 - p0) * (q1 - q0);
    if err <= PAIR_REL_TOL * scale || depth >= MAX_SPLIT_DEPTH {
        return (k, err, 225);
    }
    let pm = 0.5 * (p0 + p1);
    let qm = 0.5 * (q0 + q1);
    let mut total = (0.0, 0.0, 225);
    for ps in [(p0, pm), (pm, p1)] {
        for qs in [(q0, qm), (qm, q1)] {
            let (v, e, n) = pair_integral(a, p, ps, q, qs, depth + 1);
            total.0 += v;
            total.1 += e;
            total.2 += n;
        }
    }
    total
}

/// One α-term `¼α⁻²∬…` between two flattened chains; (value, error).
fn alpha_term(
    alpha: u32,
    r: f64,
    a_pieces: &[(f64, Piece)],
    b_pieces: &[(f64, Piece)],
    used: &AtomicU64,
    budget: u64,
) -> Option<(f64, f64, f64)> {
    let a = alpha as f64 * r * r;
    let h = 1.0 / a.sqrt();
    let pa = panels(a_pieces, h);
    let mut pb = panels(b_pieces, h);
    pb.sort_by(|x, y| x.mid.re.total_cmp(&y.mid.re));
    let b_half = pb.iter().map(|p| p.half).fold(0.0, f64::max);
    let cut = (X_CUT / a).sqrt();
    let rows: Vec<Option<(f64, f64, f64)>> = pa
        .par_iter()
        .map(|u| {
            let reach = cut + u.half + b_half;
            let lo = pb.partition_point(|v| v.mid.re < u.mid.re - reach);
            let hi = pb.partition_point(|v| v.mid.re <= u.mid.re + reach);
            let (mut vals, mut errs) = (Vec::new(), 0.0);
            let mut evaluations = 0;
            for v in &pb[lo..hi] {
                if (v.mid - u.mid).norm() - u.half - v.half > cut {
                    continue;
                }
                let (val, err, n) = pair_integral(
                    a,
                    &a_pieces[u.piece].1,
                    (u.s0, u.s1),
                    &b_pieces[v.piece].1,
                    (v.s0, v.s1),
                    0,
                );
                let w = u.weight * v.weight;
                vals.push(w * val);
                errs += w.abs() * err;
                evaluations += n;
            }
            if used.fetch_add(evaluations, Ordering::Relaxed) + evaluations > budget {
                return None;
            }
            let magnitude = vals.iter().map(|v| v.abs()).sum();
            Some((exact_sum(vals), errs, magnitude))
        })
        .collect();
    let rows: Option<Vec<_>> = rows.into_iter().collect();
    let rows = rows?;
    let scale = 0.25 / (alpha as f64 * alpha as f64);
    let value = exact_sum(rows.iter().map(|r| r.0));
    let err: f64 = rows.iter().map(|r| r.1).sum();
    let magnitude: f64 = rows.iter().map(|r| r.2).sum();
    Some((scale * value, scale * err, scale * magnitude))
}

/// Fit `tₐ·α^{3/2} ≈ c + d/√α + e/α` through α ∈ {A/4, A/2, A} and sum the
/// model over α > A. Returns (tail, uncertainty), the latter being the
/// difference to the two-parameter model `c + e/α` fitted at {A/2, A}.
fn extrapolate_tail(terms: &[f64]) -> (f64, f64) {
    let big_a = terms.len();
    let g = |alpha: usize| terms[alpha - 1] * (alpha as f64).powf(1.5);
    let pts = [big_a / 4, big_a / 2, big_a];
    let row = |p: usize| [1.0, (p as f64).powf(-0.5), 1.0 / p as f64];
    let m = solve3([row(pts[0]), row(pts[1]), row(pts[2])], [g(pts[0]), g(pts[1]), g(pts[2])]);
    let n = big_a as u64 + 1;
    let z15 = zeta_tail(1.5, n);
    let z2 = zeta_tail(2.0, n);
    let z25 = zeta_tail(2.5, n);
    let three = m[0] * z15 + m[1] * z2 + m[2] * z25;
    let (p, q) = (pts[1] as f64, pts[2] as f64);
    let e = (g(pts[1]) - g(pts[2])) / (1.0 / p - 1.0 / q);
    let c = g(pts[2]) - e / q;
    let two = c * z15 + e * z25;
    (three, (three - two).abs())
}

/// Gaussian elimination with partial pivoting for a 3×3 system.
fn solve3(mut m: [[f64; 3]; 3], mut y: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        y.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (y[row] - s) / m[row][row];
    }
    x
}

/// Covariance of `Δ_R(A)` and `Δ_R(B)` for ℝ-chains.
///
/// α-terms are added until, at A = 16, 32, 64, …, the quadrature error plus
/// the tail-model uncertainty is at most `tol·|value|` (or `tol·10⁻³` of
/// the absolute magnitude of all contributions, for cancelling chains).
pub fn cov_quadrature_chains(a: &RChain, b: &RChain, r: f64, opts: &CovOptions) -> Result<CovEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::validation("R", "must be positive"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tol", "must be positive"));
    }
    if opts.max_alpha < MIN_ALPHA {
        return Err(Error::validation("max_alpha", format!("must be at least {MIN_ALPHA}")));
    }
    let a_pieces = flatten(a);
    let b_pieces = flatten(b);
    if a_pieces.is_empty() || b_pieces.is_empty() {
        return Ok(CovEstimate {
            value: 0.0,
            bound: 0.0,
            alpha_terms: 1,
            evaluations: 0,
            terms: vec![0.0],
            tail: 0.0,
        });
    }
    let used = AtomicU64::new(0);
    let mut terms = Vec::new();
    let mut errors = Vec::new();
    let mut magnitude = 0.0;
    let mut checkpoint = MIN_ALPHA;
    loop {
        let alpha = terms.len() as u32 + 1;
        let Some((t, e, m)) = alpha_term(alpha, r, &a_pieces, &b_pieces, &used, opts.max_evaluations) else {
            return Err(Error::Numerical {
                op: "cov_quadrature",
                reason: format!("evaluation budget {} exhausted at α = {alpha}", opts.max_evaluations),
                partial: Some(exact_sum(terms.iter().copied())),
            });
        };
        terms.push(t);
        errors.push(e);
        magnitude += m;
        if alpha < checkpoint {
            continue;
        }
        let (tail, tail_err) = extrapolate_tail(&terms);
        let value = exact_sum(terms.iter().copied()) + tail;
        let bound = errors.iter().sum::<f64>() + tail_err;
        if bound <= opts.tol * value.abs().max(CANCELLATION * magnitude) {
            return Ok(CovEstimate {
                value,
                bound,
                alpha_terms: alpha,
                evaluations: used.load(Ordering::Relaxed),
                terms,
                tail,
            });
        }
        if checkpoint >= opts.max_alpha {
            return Err(Error::Numerical {
                op: "cov_quadrature",
                reason: format!("bound {bound:e} above tol·|value| after {alpha} α-terms"),
                partial: Some(value),
            });
        }
        checkpoint = (checkpoint * 2).min(opts.max_alpha);
    }
}

/// Covariance of the increments along two curves.
pub fn cov_quadrature(a: &Curve, b: &Curve, r: f64, tol: f64) -> Result<CovEstimate> {
    let opts = CovOptions { tol, ..CovOptions::default() };
    cov_quadrature_chains(&RChain::single(a.clone()), &RChain::single(b.clone()), r, &opts)
}

/// `limit_constant · 𝓛(A, B) · R`.
pub fn asymptotic_cov(a: &RChain, b: &RChain, r: f64) -> f64 {
    limit_constant() * signed_length(a, b, DEFAULT_GEO_TOL) * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    /// `E[Δ_R(A)]`.
    pub mean: f64,
    pub cov_finite_r: f64,
    pub cov_stderr_bound: f64,
    pub asymptotic_cov: f64,
    pub r: f64,
    pub alpha_terms_used: u32,
}

pub fn predict(a: &RChain, b: &RChain, r: f64, opts: &CovOptions) -> Result<TheoryPrediction> {
    let cov = cov_quadrature_chains(a, b, r, opts)?;
    Ok(TheoryPrediction {
        mean: a.mean_increment(r),
        cov_finite_r: cov.value,
        cov_stderr_bound: cov.bound,
        asymptotic_cov: asymptotic_cov(a, b, r),
        r,
        alpha_terms_used: cov.alpha_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use std::f64::consts::PI;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn circle() -> Curve {
        Curve::circle(c(0.0, 0.0), 1.0, true).unwrap()
    }

    /// Unit circle with itself reduces to one angular integral per α.
    fn circle_term(alpha: u32, r: f64) -> f64 {
        let a = alpha as f64 * r * r;
        let g = |phi: f64| {
            let one_minus = 2.0 * (0.5 * phi).sin().powi(2);
            (-2.0 * a * one_minus).exp() * (2.0 * a * phi.cos() + 4.0 * a * a * one_minus * one_minus)
        };
        let w = PI.min(14.0 / a.sqrt());
        let (v, _) = integrate(g, -w, w, 1e-13, 40);
        0.25 * 2.0 * PI * v / (alpha as f64 * alpha as f64)
    }

    #[test]
    fn terms_match_reduced_circle_integral() {
        let est = cov_quadrature(&circle(), &circle(), 4.0, 1e-6).unwrap();
        for alpha in [1, 2, 7, 16] {
            let expected = circle_term(alpha, 4.0);
            let got = est.terms[alpha as usize - 1];
            assert!((got / expected - 1.0).abs() < 1e-9, "α={alpha}: {got} vs {expected}");
        }
    }

    #[test]
    fn circle_reference_values() {
        // Dense one-dimensional reference with the α-sum carried to 4000
        // and a fitted remainder.
        for (r, reference) in [(2.0, 29.878_429_24), (4.0, 58.545_408_80), (8.0, 116.548_666_09)] {
            let est = cov_quadrature(&circle(), &circle(), r, 1e-5).unwrap();
            // The reported bound must cover the actual error.
            let err = (est.value - reference).abs();
            assert!(err <= est.bound + 1e-7 * reference, "R={r}: {} ± {} vs {reference}", est.value, est.bound);
            assert!(est.bound < 1e-5 * est.value);
            assert!(est.alpha_terms >= MIN_ALPHA);
        }
    }

    #[test]
    fn distant_segments_decouple() {
        let s1 = Curve::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let s2 = Curve::segment(c(0.0, 10.0), c(1.0, 10.0)).unwrap();
        let est = cov_quadrature(&s1, &s2, 4.0, 1e-4).unwrap();
        assert!(est.value.abs() < 1e-20);
    }

    #[test]
    fn symmetric_in_arguments() {
        let arc = Curve::arc(c(0.2, 0.0), 0.8, 0.0, 2.0).unwrap();
        let seg = Curve::segment(c(0.5, -0.5), c(0.9, 0.7)).unwrap();
        let ab = cov_quadrature(&arc, &seg, 3.0, 1e-5).unwrap().value;
        let ba = cov_quadrature(&seg, &arc, 3.0, 1e-5).unwrap().value;
        assert!((ab - ba).abs() <= 1e-9 * ab.abs().max(1e-300), "{ab} vs {ba}");
    }

    #[test]
    fn asymptotic_examples() {
        let circle = RChain::single(circle());
        let v = asymptotic_cov(&circle, &circle, 10.0);
        assert!((v - 145.465_627_923_18).abs() < 1e-9);
        assert_eq!(asymptotic_cov(&circle, &circle, 20.0), 2.0 * v);
        let far = circle.translated(c(5.0, 0.0));
        assert_eq!(asymptotic_cov(&circle, &far, 10.0), 0.0);
    }

    #[test]
    fn cancelling_chain_is_exactly_zero() {
        let g = circle();
        let chain = RChain::new(vec![(2.0, g.clone()), (-1.0, g.clone()), (-1.0, g)]).unwrap();
        let est = cov_quadrature_chains(&chain, &chain, 4.0, &CovOptions::default()).unwrap();
        assert_eq!((est.value, est.bound), (0.0, 0.0));
    }

    #[test]
    fn curve_against_its_reversal_cancels() {
        let g = Curve::arc(c(0.0, 0.0), 1.0, 0.0, 2.0).unwrap();
        let chain = RChain::new(vec![(1.0, g.clone()), (1.0, g.reversed())]).unwrap();
        let est = cov_quadrature_chains(&chain, &chain, 4.0, &CovOptions::default()).unwrap();
        let single = cov_quadrature(&g, &g, 4.0, 1e-4).unwrap();
        assert!(est.value.abs() < 1e-6 * single.value, "{}", est.value);
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let opts = CovOptions {
            max_evaluations: 1_000_000,
            ..CovOptions::default()
        };
        let chain = RChain::single(circle());
        match cov_quadrature_chains(&chain, &chain, 4.0, &opts) {
            Err(Error::Numerical { partial: Some(p), .. }) => assert!(p > 0.0 && p < 58.6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn solve3_recovers_solution() {
        let x = solve3([[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [1.0, 0.0, 4.0]], [4.0, 5.0, 9.0]);
        let expect = [1.0, 1.0, 2.0];
        for k in 0..3 {
            assert!((x[k] - expect[k]).abs() < 1e-14);
        }
    }
}
