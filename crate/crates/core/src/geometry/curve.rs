use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// The shape of an oriented curve.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    Segment {
        start: Complex64,
        end: Complex64,
    },
    /// `center + radius·e^{iθ}` for θ running from `theta_start` to
    /// `theta_end`; the sign of the difference is the orientation.
    Arc {
        center: Complex64,
        radius: f64,
        theta_start: f64,
        theta_end: f64,
    },
    Polyline {
        vertices: Vec<Complex64>,
    },
}

/// A smooth piece of a curve: a segment or an arc. Polylines decompose
/// into one segment per edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Segment {
        start: Complex64,
        end: Complex64,
    },
    Arc {
        center: Complex64,
        radius: f64,
        theta_start: f64,
        theta_end: f64,
    },
}

impl Piece {
    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => (end - start).norm(),
            Piece::Arc {
                radius,
                theta_start,
                theta_end,
                ..
            } => radius * (theta_end - theta_start).abs(),
        }
    }

    /// Point at arclength `s` from the start.
    pub fn point(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Segment { start, end } => start + (end - start) * (s / (end - start).norm()),
            Piece::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let theta = theta_start + (theta_end - theta_start).signum() * s / radius;
                center + Complex64::from_polar(radius, theta)
            }
        }
    }

    /// Unit tangent at arclength `s`.
    pub fn tangent(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Segment { start, end } => (end - start) / (end - start).norm(),
            Piece::Arc {
                radius,
                theta_start,
                theta_end,
                ..
            } => {
                let dir = (theta_end - theta_start).signum();
                let theta = theta_start + dir * s / radius;
                I * Complex64::from_polar(dir, theta)
            }
        }
    }

    /// Unit normal: the tangent rotated by −π/2.
    pub fn normal(&self, s: f64) -> Complex64 {
        self.tangent(s) * MINUS_I
    }

    /// Point and unit normal at arclength `s`.
    pub fn frame(&self, s: f64) -> (Complex64, Complex64) {
        (self.point(s), self.normal(s))
    }
}

/// An oriented simple curve: segment, circular arc, or polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    kind: CurveKind,
    /// Cumulative edge lengths for polylines, `[0, l₁, l₁+l₂, …]`.
    cumulative: Vec<f64>,
}

impl Curve {
    pub fn segment(start: Complex64, end: Complex64) -> Result<Self> {
        check_finite("segment", &[start, end])?;
        if start == end {
            return Err(Error::validation("segment", "start and end coincide"));
        }
        Ok(Self::from_kind(CurveKind::Segment { start, end }))
    }

    pub fn arc(center: Complex64, radius: f64, theta_start: f64, theta_end: f64) -> Result<Self> {
        check_finite("arc", &[center])?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::validation("arc radius", format!("must be > 0, got {radius}")));
        }
        if !(theta_start.is_finite() && theta_end.is_finite()) {
            return Err(Error::validation("arc angles", "must be finite"));
        }
        let sweep = (theta_end - theta_start).abs();
        if sweep == 0.0 {
            return Err(Error::validation("arc angles", "theta_start equals theta_end"));
        }
        if sweep > TAU * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::validation("arc angles", format!("sweep {sweep} exceeds 2π")));
        }
        Ok(Self::from_kind(CurveKind::Arc {
            center,
            radius,
            theta_start,
            theta_end,
        }))
    }

    /// Full circle starting at angle 0, counter-clockwise when `ccw`.
    pub fn circle(center: Complex64, radius: f64, ccw: bool) -> Result<Self> {
        Self::arc(center, radius, 0.0, if ccw { TAU } else { -TAU })
    }

    /// Polyline through `vertices`; closing the loop by repeating the first
    /// vertex is allowed. Rejects repeated consecutive vertices and any
    /// self-intersection.
    pub fn polyline(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::validation("polyline", "needs at least 2 vertices"));
        }
        check_finite("polyline", &vertices)?;
        if let Some(k) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::validation(
                "polyline",
                format!("vertices {k} and {} coincide", k + 1),
            ));
        }
        let edges = vertices.len() - 1;
        let closed = edges >= 2 && vertices[0] == vertices[edges];
        for i in 0..edges {
            for j in i + 1..edges {
                let (a, b) = (vertices[i], vertices[i + 1]);
                let (c, d) = (vertices[j], vertices[j + 1]);
                let adjacent = j == i + 1 || (closed && i == 0 && j == edges - 1);
                if adjacent {
                    // shared vertex; only a fold-back overlaps
                    let (u, v) = if j == i + 1 { (a - b, d - c) } else { (b - a, c - d) };
                    if cross(u, v) == 0.0 && dot(u, v) > 0.0 {
                        return Err(Error::validation(
                            "polyline",
                            format!("edges {i} and {j} fold back on each other"),
                        ));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(Error::validation(
                        "polyline",
                        format!("edges {i} and {j} intersect"),
                    ));
                }
            }
        }
        Ok(Self::from_kind(CurveKind::Polyline { vertices }))
    }

    fn from_kind(kind: CurveKind) -> Self {
        let cumulative = match &kind {
            CurveKind::Polyline { vertices } => {
                let mut acc = vec![0.0];
                let mut total = 0.0;
                for w in vertices.windows(2) {
                    total += (w[1] - w[0]).norm();
                    acc.push(total);
                }
                acc
            }
            _ => Vec::new(),
        };
        Self { kind, cumulative }
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn length(&self) -> f64 {
        match &self.kind {
            CurveKind::Polyline { .. } => *self.cumulative.last().unwrap(),
            _ => self.pieces()[0].length(),
        }
    }

    /// Smooth pieces in traversal order.
    pub fn pieces(&self) -> Vec<Piece> {
        match &self.kind {
            CurveKind::Segment { start, end } => vec![Piece::Segment {
                start: *start,
                end: *end,
            }],
            CurveKind::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => vec![Piece::Arc {
                center: *center,
                radius: *radius,
                theta_start: *theta_start,
                theta_end: *theta_end,
            }],
            CurveKind::Polyline { vertices } => vertices
                .windows(2)
                .map(|w| Piece::Segment {
                    start: w[0],
                    end: w[1],
                })
                .collect(),
        }
    }

    /// Locate parameter `t ∈ [0,1]` (proportional to arclength): the edge
    /// index and the parameter within it.
    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.clamp(0.0, 1.0);
        match &self.kind {
            CurveKind::Polyline { .. } => {
                let target = t * self.length();
                let edges = self.cumulative.len() - 1;
                let k = self.cumulative[1..]
                    .iter()
                    .position(|&c| target < c)
                    .unwrap_or(edges - 1);
                let len = self.cumulative[k + 1] - self.cumulative[k];
                (k, ((target - self.cumulative[k]) / len).clamp(0.0, 1.0))
            }
            _ => (0, t),
        }
    }

    pub fn point_at(&self, t: f64) -> Complex64 {
        match &self.kind {
            CurveKind::Segment { start, end } => *start + (*end - *start) * t,
            CurveKind::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let theta = theta_start + t * (theta_end - theta_start);
                *center + Complex64::from_polar(*radius, theta)
            }
            CurveKind::Polyline { vertices } => {
                let (k, s) = self.locate(t);
                vertices[k] + (vertices[k + 1] - vertices[k]) * s
            }
        }
    }

    /// Unit tangent. On a polyline vertex the tangent of the following edge
    /// is returned (the preceding one at `t = 1`); see [`Curve::at_vertex`].
    pub fn tangent_at(&self, t: f64) -> Complex64 {
        match &self.kind {
            CurveKind::Segment { start, end } => (*end - *start).unscale((*end - *start).norm()),
            CurveKind::Arc {
                theta_start,
                theta_end,
                ..
            } => {
                let theta = theta_start + t * (theta_end - theta_start);
                I * Complex64::from_polar((theta_end - theta_start).signum(), theta)
            }
            CurveKind::Polyline { vertices } => {
                let (k, _) = self.locate(t);
                let d = vertices[k + 1] - vertices[k];
                d.unscale(d.norm())
            }
        }
    }

    /// Unit normal, the tangent rotated by −π/2. Outward for a
    /// counter-clockwise circle.
    pub fn normal_at(&self, t: f64) -> Complex64 {
        self.tangent_at(t) * MINUS_I
    }

    /// Whether `t` falls on an interior polyline vertex, where the tangent
    /// is one-sided.
    pub fn at_vertex(&self, t: f64) -> bool {
        match &self.kind {
            CurveKind::Polyline { .. } => {
                let target = t * self.length();
                let n = self.cumulative.len();
                self.cumulative[1..n - 1]
                    .iter()
                    .any(|&c| (c - target).abs() <= 1e-12 * self.length())
            }
            _ => false,
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point_at(1.0)
    }

    pub fn reversed(&self) -> Self {
        match &self.kind {
            CurveKind::Segment { start, end } => Self::from_kind(CurveKind::Segment {
                start: *end,
                end: *start,
            }),
            CurveKind::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => Self::from_kind(CurveKind::Arc {
                center: *center,
                radius: *radius,
                theta_start: *theta_end,
                theta_end: *theta_start,
            }),
            CurveKind::Polyline { vertices } => {
                let mut v = vertices.clone();
                v.reverse();
                Self::from_kind(CurveKind::Polyline { vertices: v })
            }
        }
    }

    /// The curve shifted by `w`.
    pub fn translated(&self, w: Complex64) -> Self {
        self.map_affine(Complex64::new(1.0, 0.0), w)
    }

    /// The curve rotated about the origin by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        self.map_affine(Complex64::from_polar(1.0, phi), Complex64::new(0.0, 0.0))
    }

    fn map_affine(&self, rot: Complex64, shift: Complex64) -> Self {
        let m = |z: Complex64| rot * z + shift;
        match &self.kind {
            CurveKind::Segment { start, end } => Self::from_kind(CurveKind::Segment {
                start: m(*start),
                end: m(*end),
            }),
            CurveKind::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let phi = rot.arg();
                Self::from_kind(CurveKind::Arc {
                    center: m(*center),
                    radius: *radius,
                    theta_start: theta_start + phi,
                    theta_end: theta_end + phi,
                })
            }
            CurveKind::Polyline { vertices } => Self::from_kind(CurveKind::Polyline {
                vertices: vertices.iter().map(|&v| m(v)).collect(),
            }),
        }
    }

    /// `∫_Γ z̄ dz` in closed form.
    pub fn zbar_integral(&self) -> Complex64 {
        self.pieces().iter().map(zbar_piece).sum()
    }

    /// `∫_Γ dz`, the end point minus the start point.
    pub fn displacement(&self) -> Complex64 {
        match &self.kind {
            CurveKind::Arc {
                radius,
                theta_start,
                theta_end,
                ..
            } => {
                Complex64::from_polar(*radius, *theta_end)
                    - Complex64::from_polar(*radius, *theta_start)
            }
            _ => self.end() - self.start(),
        }
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        (self.end() - self.start()).norm() <= tol
    }

    /// An upper bound for `max |z|` on the curve.
    pub fn max_modulus(&self) -> f64 {
        match &self.kind {
            CurveKind::Segment { start, end } => start.norm().max(end.norm()),
            CurveKind::Arc { center, radius, .. } => center.norm() + radius,
            CurveKind::Polyline { vertices } => vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }
}

fn zbar_piece(piece: &Piece) -> Complex64 {
    match *piece {
        Piece::Segment { start, end } => ((start + end) * 0.5).conj() * (end - start),
        Piece::Arc {
            center,
            radius,
            theta_start,
            theta_end,
        } => {
            center.conj()
                * radius
                * (Complex64::from_polar(1.0, theta_end) - Complex64::from_polar(1.0, theta_start))
                + I * (radius * radius * (theta_end - theta_start))
        }
    }
}

fn check_finite(what: &str, points: &[Complex64]) -> Result<()> {
    if points.iter().all(|p| p.re.is_finite() && p.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation(what, "coordinates must be finite"))
    }
}

pub(crate) fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

pub(crate) fn dot(u: Complex64, v: Complex64) -> f64 {
    u.re * v.re + u.im * v.im
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

/// Closed-segment intersection test, touching included.
pub(crate) fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, b, c))
        || (d2 == 0.0 && on_segment(a, b, d))
        || (d3 == 0.0 && on_segment(c, d, a))
        || (d4 == 0.0 && on_segment(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn segment_frame() {
        let s = Curve::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(s.tangent_at(t), c(1.0, 0.0));
            assert_eq!(s.normal_at(t), c(0.0, -1.0));
        }
    }

    #[test]
    fn ccw_circle_normal_points_outward() {
        let circ = Curve::circle(c(0.0, 0.0), 1.0, true).unwrap();
        assert_abs_diff_eq!((circ.point_at(0.0) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((circ.tangent_at(0.0) - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((circ.normal_at(0.0) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let z = circ.point_at(0.37);
        assert_abs_diff_eq!((circ.normal_at(0.37) - z).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reversal_flips_tangent() {
        let curves = [
            Curve::segment(c(0.0, 0.0), c(1.0, 2.0)).unwrap(),
            Curve::arc(c(0.5, 0.0), 2.0, 0.3, 2.0).unwrap(),
            Curve::polyline(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(3.0, 2.0)]).unwrap(),
        ];
        for curve in &curves {
            let rev = curve.reversed();
            for t in [0.1, 0.45, 0.8] {
                assert_abs_diff_eq!((rev.point_at(1.0 - t) - curve.point_at(t)).norm(), 0.0, epsilon = 1e-14);
                assert_abs_diff_eq!((rev.tangent_at(1.0 - t) + curve.tangent_at(t)).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn invalid_primitives_are_rejected() {
        assert!(Curve::segment(c(1.0, 1.0), c(1.0, 1.0)).is_err());
        assert!(Curve::arc(c(0.0, 0.0), 0.0, 0.0, 1.0).is_err());
        assert!(Curve::arc(c(0.0, 0.0), 1.0, 1.0, 1.0).is_err());
        assert!(Curve::arc(c(0.0, 0.0), 1.0, 0.0, 7.0).is_err());
        assert!(Curve::polyline(vec![c(0.0, 0.0)]).is_err());
        assert!(Curve::polyline(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        // bow tie
        assert!(Curve::polyline(vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)]).is_err());
        // fold back
        assert!(Curve::polyline(vec![c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(Curve::segment(c(f64::NAN, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn closed_polygon_is_simple() {
        let square = Curve::polyline(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!(square.is_closed(1e-12));
        assert_abs_diff_eq!(square.length(), 4.0);
        assert!(square.at_vertex(0.25));
        assert!(!square.at_vertex(0.3));
        assert_abs_diff_eq!(square.zbar_integral().im, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn zbar_integrals() {
        let s = Curve::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(s.zbar_integral(), c(0.5, 0.0));
        for r in [0.5, 1.0, 2.0] {
            let circ = Curve::circle(c(0.3, -0.2), r, true).unwrap();
            assert_abs_diff_eq!(circ.zbar_integral().im, 2.0 * PI * r * r, epsilon = 1e-12);
            assert_abs_diff_eq!(circ.displacement().norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn translation_shifts_zbar_by_displacement() {
        let s = Curve::segment(c(0.2, -1.0), c(1.5, 0.7)).unwrap();
        let w = c(-0.4, 2.5);
        let lhs = s.translated(w).zbar_integral().im - s.zbar_integral().im;
        let rhs = (w.conj() * s.displacement()).im;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
    }

    #[test]
    fn polyline_parameterisation() {
        let p = Curve::polyline(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(p.length(), 4.0);
        assert_abs_diff_eq!((p.point_at(0.5) - c(1.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(p.tangent_at(0.1), c(1.0, 0.0));
        assert_eq!(p.tangent_at(0.9), c(0.0, 1.0));
        assert_eq!(p.end(), c(1.0, 3.0));
    }
}
