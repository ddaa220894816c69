use num_complex::Complex64;

use super::curve::Curve;
use crate::error::{Error, Result};

/// A finite formal sum `Σ aᵢ Γᵢ` of oriented curves with non-zero real
/// weights. Terms are kept as given: no merging or cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct RChain {
    terms: Vec<(f64, Curve)>,
}

impl RChain {
    pub fn new(terms: Vec<(f64, Curve)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::validation("chain", "needs at least one term"));
        }
        for (k, (w, _)) in terms.iter().enumerate() {
            if !w.is_finite() || *w == 0.0 {
                return Err(Error::validation(
                    format!("term {k} weight"),
                    format!("must be finite and non-zero, got {w}"),
                ));
            }
        }
        Ok(Self { terms })
    }

    pub fn single(curve: Curve) -> Self {
        Self {
            terms: vec![(1.0, curve)],
        }
    }

    pub fn terms(&self) -> &[(f64, Curve)] {
        &self.terms
    }

    /// Formal sum with another chain.
    pub fn plus(&self, other: &RChain) -> RChain {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        RChain { terms }
    }

    pub fn scaled(&self, factor: f64) -> Result<RChain> {
        RChain::new(self.terms.iter().map(|(w, c)| (w * factor, c.clone())).collect())
    }

    /// Every curve reversed, weights unchanged.
    pub fn reversed(&self) -> RChain {
        RChain {
            terms: self.terms.iter().map(|(w, c)| (*w, c.reversed())).collect(),
        }
    }

    pub fn translated(&self, w: Complex64) -> RChain {
        RChain {
            terms: self.terms.iter().map(|(a, c)| (*a, c.translated(w))).collect(),
        }
    }

    pub fn rotated(&self, phi: f64) -> RChain {
        RChain {
            terms: self.terms.iter().map(|(a, c)| (*a, c.rotated(phi))).collect(),
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.max_modulus()).fold(0.0, f64::max)
    }

    /// `Σ aᵢ ∫_{Γᵢ} z̄ dz`.
    pub fn zbar_integral(&self) -> Complex64 {
        self.terms.iter().map(|(w, c)| c.zbar_integral() * *w).sum()
    }

    /// `Σ aᵢ ∫_{Γᵢ} dz`.
    pub fn displacement(&self) -> Complex64 {
        self.terms.iter().map(|(w, c)| c.displacement() * *w).sum()
    }

    /// `E[Δ_R(Γ)] = R² Im Σ aᵢ ∫_{Γᵢ} z̄ dz`.
    pub fn mean_increment(&self, r: f64) -> f64 {
        r * r * self.zbar_integral().im
    }

    /// True when the formal boundary vanishes: every curve is closed, or the
    /// weighted end points cancel after merging points within `tol`.
    pub fn is_closed(&self, tol: f64) -> bool {
        if self.terms.iter().all(|(_, c)| c.is_closed(tol)) {
            return true;
        }
        let mut nodes: Vec<(Complex64, f64)> = Vec::new();
        let mut add = |p: Complex64, w: f64| {
            if let Some(node) = nodes.iter_mut().find(|(q, _)| (p - *q).norm() <= tol) {
                node.1 += w;
            } else {
                nodes.push((p, w));
            }
        };
        for (w, c) in &self.terms {
            if c.is_closed(tol) {
                continue;
            }
            add(c.end(), *w);
            add(c.start(), -*w);
        }
        let scale: f64 = self.terms.iter().map(|(w, _)| w.abs()).sum();
        nodes.iter().all(|(_, w)| w.abs() <= 1e-12 * scale)
    }
}

/// `E[Δ_R(Γ)]` for a chain; see [`RChain::mean_increment`].
pub fn mean_increment(chain: &RChain, r: f64) -> f64 {
    chain.mean_increment(r)
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
    fn unit_circle_mean() {
        let chain = RChain::single(Curve::circle(c(0.0, 0.0), 1.0, true).unwrap());
        assert_abs_diff_eq!(chain.mean_increment(3.0), 2.0 * PI * 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chain.mean_increment(3.0), 56.548_667_764_616_276, epsilon = 1e-9);
    }

    #[test]
    fn real_segment_has_zero_mean() {
        let chain = RChain::single(Curve::segment(c(-1.0, 0.0), c(2.0, 0.0)).unwrap());
        assert_eq!(chain.mean_increment(7.0), 0.0);
    }

    #[test]
    fn cancelling_chain_has_zero_mean() {
        let g = Curve::arc(c(0.2, 0.1), 0.8, 0.3, 2.9).unwrap();
        let chain = RChain::new(vec![(2.0, g.clone()), (-1.0, g.clone()), (-1.0, g)]).unwrap();
        assert_eq!(chain.mean_increment(5.0), 0.0);
    }

    #[test]
    fn zero_weight_rejected() {
        let g = Curve::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(RChain::new(vec![(0.0, g.clone())]).is_err());
        assert!(RChain::new(vec![(f64::NAN, g)]).is_err());
        assert!(RChain::new(vec![]).is_err());
    }

    #[test]
    fn closedness() {
        let pie = RChain::new(vec![
            (1.0, Curve::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap()),
            (1.0, Curve::arc(c(0.0, 0.0), 1.0, 0.0, PI / 2.0).unwrap()),
            (1.0, Curve::segment(c(0.0, 1.0), c(0.0, 0.0)).unwrap()),
        ])
        .unwrap();
        assert!(pie.is_closed(1e-9));
        assert_abs_diff_eq!(pie.zbar_integral().im, PI / 2.0, epsilon = 1e-14);
        let open = RChain::single(Curve::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap());
        assert!(!open.is_closed(1e-9));
    }
}
