//! The signed length `𝓛(Γ₁, Γ₂)`: length of the overlap of two curves,
//! counted `+1` where their normals agree and `−1` where they are opposite.
//!
//! Exact for the primitive family. Collinear segments contribute their
//! overlap, concentric equal-radius arcs contribute radius times the shared
//! angle, and every other pair (crossings, segment against arc) meets in a
//! null set and contributes 0.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64;

use super::chain::RChain;
use super::curve::{cross, dot, Piece};
use crate::special::exact_sum;

pub const DEFAULT_GEO_TOL: f64 = 1e-9;

/// `Σ_{i,j} aᵢ bⱼ 𝓛(Γᵢ, Γⱼ)`.
///
/// Each pair is evaluated in a canonical order fixed by the undirected
/// geometry and the contributions are summed exactly, so the result is
/// symmetric and flips sign under reversal bit-for-bit.
pub fn signed_length(a: &RChain, b: &RChain, geo_tol: f64) -> f64 {
    let mut contributions = Vec::new();
    for (wa, ca) in a.terms() {
        let pa = ca.pieces();
        for (wb, cb) in b.terms() {
            let pb = cb.pieces();
            let weight = wa * wb;
            for p in &pa {
                for q in &pb {
                    let l = piece_signed_length(p, q, geo_tol);
                    if l != 0.0 {
                        contributions.push(weight * l);
                    }
                }
            }
        }
    }
    exact_sum(contributions)
}

/// Signed length of two smooth pieces.
pub fn piece_signed_length(p: &Piece, q: &Piece, geo_tol: f64) -> f64 {
    let (p, q) = match compare_keys(&undirected_key(p), &undirected_key(q)) {
        Ordering::Greater => (q, p),
        _ => (p, q),
    };
    match (*p, *q) {
        (Piece::Segment { start: p0, end: p1 }, Piece::Segment { start: q0, end: q1 }) => {
            segment_overlap(p0, p1, q0, q1, geo_tol)
        }
        (
            Piece::Arc {
                center: c1,
                radius: r1,
                theta_start: s1,
                theta_end: e1,
            },
            Piece::Arc {
                center: c2,
                radius: r2,
                theta_start: s2,
                theta_end: e2,
            },
        ) => {
            if (c1 - c2).norm() > geo_tol || (r1 - r2).abs() > geo_tol {
                return 0.0;
            }
            let angle = arc_overlap(s1, e1, s2, e2);
            if angle * r1 <= geo_tol {
                return 0.0;
            }
            let sign = (e1 - s1).signum() * (e2 - s2).signum();
            sign * r1 * angle
        }
        _ => 0.0,
    }
}

fn segment_overlap(p0: Complex64, p1: Complex64, q0: Complex64, q1: Complex64, tol: f64) -> f64 {
    let (lo_p, hi_p) = sorted_pair(p0, p1);
    let len_p = (hi_p - lo_p).norm();
    let u = (hi_p - lo_p) / len_p;
    if cross(u, q0 - lo_p).abs() > tol || cross(u, q1 - lo_p).abs() > tol {
        return 0.0;
    }
    let s0 = dot(u, q0 - lo_p);
    let s1 = dot(u, q1 - lo_p);
    let mut lo = s0.min(s1).max(0.0);
    let mut hi = s0.max(s1).min(len_p);
    if lo.abs() <= tol {
        lo = 0.0;
    }
    if (hi - len_p).abs() <= tol {
        hi = len_p;
    }
    let overlap = hi - lo;
    if overlap <= tol {
        return 0.0;
    }
    overlap * dot(p1 - p0, q1 - q0).signum()
}

/// Measure of the intersection of two angular ranges on the circle.
fn arc_overlap(s1: f64, e1: f64, s2: f64, e2: f64) -> f64 {
    let (a1, l1) = (s1.min(e1), (e1 - s1).abs());
    let (a2, l2) = (s2.min(e2), (e2 - s2).abs());
    let d = (a2 - a1).rem_euclid(TAU);
    let overlap = |lo: f64, hi: f64| (hi.min(l1) - lo.max(0.0)).max(0.0);
    overlap(d, d + l2) + overlap(d - TAU, d - TAU + l2)
}

fn sorted_pair(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    match a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    }
}

fn undirected_key(p: &Piece) -> [f64; 6] {
    match *p {
        Piece::Segment { start, end } => {
            let (lo, hi) = sorted_pair(start, end);
            [0.0, lo.re, lo.im, hi.re, hi.im, 0.0]
        }
        Piece::Arc {
            center,
            radius,
            theta_start,
            theta_end,
        } => [
            1.0,
            center.re,
            center.im,
            radius,
            theta_start.min(theta_end),
            (theta_end - theta_start).abs(),
        ],
    }
}

fn compare_keys(a: &[f64; 6], b: &[f64; 6]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Curve;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn seg(a: (f64, f64), b: (f64, f64)) -> RChain {
        RChain::single(Curve::segment(c(a.0, a.1), c(b.0, b.1)).unwrap())
    }

    #[test]
    fn collinear_segments_overlap() {
        let a = seg((0.0, 0.0), (2.0, 0.0));
        let b = seg((1.0, 0.0), (3.0, 0.0));
        assert_eq!(signed_length(&a, &b, DEFAULT_GEO_TOL), 1.0);
        assert_eq!(signed_length(&a, &b.reversed(), DEFAULT_GEO_TOL), -1.0);
    }

    #[test]
    fn circle_against_its_reversal() {
        let circ = RChain::single(Curve::circle(c(0.0, 0.0), 1.0, true).unwrap());
        assert_eq!(signed_length(&circ, &circ.reversed(), DEFAULT_GEO_TOL), -2.0 * PI);
        assert_eq!(signed_length(&circ, &circ, DEFAULT_GEO_TOL), 2.0 * PI);
    }

    #[test]
    fn crossing_segments_contribute_nothing() {
        let a = seg((-1.0, 0.0), (1.0, 0.0));
        let b = seg((0.0, -1.0), (0.0, 1.0));
        assert_eq!(signed_length(&a, &b, DEFAULT_GEO_TOL), 0.0);
    }

    #[test]
    fn shared_quarter_arc() {
        let a = RChain::single(Curve::arc(c(0.0, 0.0), 1.0, 0.0, PI).unwrap());
        let b = RChain::single(Curve::arc(c(0.0, 0.0), 1.0, PI / 2.0, 1.5 * PI).unwrap());
        assert_eq!(signed_length(&a, &b, DEFAULT_GEO_TOL), PI / 2.0);
    }

    #[test]
    fn arc_overlap_wraps_around() {
        let a = RChain::single(Curve::arc(c(0.0, 0.0), 2.0, -0.5, 0.5).unwrap());
        let b = RChain::single(Curve::arc(c(0.0, 0.0), 2.0, 6.0, 2.0 * PI + 1.0).unwrap());
        let expected = 2.0 * (0.5 - (6.0 - 2.0 * PI));
        assert!((signed_length(&a, &b, DEFAULT_GEO_TOL) - expected).abs() < 1e-14);
    }

    #[test]
    fn segment_and_arc_do_not_overlap() {
        let a = seg((1.0, -1.0), (1.0, 1.0));
        let b = RChain::single(Curve::circle(c(0.0, 0.0), 1.0, true).unwrap());
        assert_eq!(signed_length(&a, &b, DEFAULT_GEO_TOL), 0.0);
    }

    #[test]
    fn parallel_but_offset_segments() {
        let a = seg((0.0, 0.0), (2.0, 0.0));
        let b = seg((0.0, 1e-6), (2.0, 1e-6));
        assert_eq!(signed_length(&a, &b, DEFAULT_GEO_TOL), 0.0);
        assert_eq!(signed_length(&a, &b, 1e-5), 2.0);
    }

    #[test]
    fn touching_end_to_end_is_zero() {
        let a = seg((0.0, 0.0), (1.0, 0.0));
        let b = seg((1.0, 0.0), (2.0, 0.0));
        assert_eq!(signed_length(&a, &b, DEFAULT_GEO_TOL), 0.0);
    }

    #[test]
    fn polyline_edges_are_handled_individually() {
        let square = RChain::single(
            Curve::polyline(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap(),
        );
        let right = RChain::single(
            Curve::polyline(vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]).unwrap(),
        );
        assert_eq!(signed_length(&square, &square, DEFAULT_GEO_TOL), 4.0);
        // shared edge traversed in opposite directions
        assert_eq!(signed_length(&square, &right, DEFAULT_GEO_TOL), -1.0);
    }
}
