//! The layered normal multishift coupler.
//!
//! A draw picks one layer of the standard normal density (a rectangle
//! `[-r, r]` at height `U`) and a random anchor `x` inside it. The induced
//! map sends every state to the anchor lattice `x + k * 2r`, so all states in
//! one lattice cell share an image, while for any fixed state the shift is
//! `N(0, sigma^2)`.

use serde::Serialize;

use crate::rng::RngStream;
use crate::special::std_normal_pdf;

/// Halfwidths below this are redrawn.
pub const MIN_HALFWIDTH: f64 = 1e-12;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplerDraw {
    /// `R` scaled by sigma; `L = -R`.
    pub halfwidth: f64,
    /// Anchor `X` scaled by sigma, `|offset| <= halfwidth`.
    pub offset: f64,
    pub scale: f64,
}

impl CouplerDraw {
    /// Builds a draw from its unit-scale layer `(r, x)`.
    pub fn from_unit(r: f64, x: f64, sigma: f64) -> Self {
        debug_assert!(r >= 0.0 && x.abs() <= r && sigma > 0.0);
        Self {
            halfwidth: sigma * r,
            offset: sigma * x,
            scale: sigma,
        }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        2.0 * self.halfwidth
    }

    /// `floor((s + R - X) / (R - L)) * (R - L) + X`.
    #[inline]
    pub fn apply(&self, s: f64) -> f64 {
        let w = self.width();
        ((s + self.halfwidth - self.offset) / w).floor() * w + self.offset
    }

    pub fn is_valid(&self) -> bool {
        self.scale > 0.0 && self.halfwidth >= 0.0 && self.offset.abs() <= self.halfwidth
    }
}

/// Inverse of the standard normal density on the positive half-line:
/// the `r >= 0` with `f(r) = level`.
pub fn unit_halfwidth(level: f64) -> f64 {
    (-2.0 * (SQRT_2PI * level).ln()).max(0.0).sqrt()
}

/// Draws one coupler packet. Each attempt consumes exactly three words
/// (`Z`, the layer height, the anchor); attempts with a degenerate layer
/// are repeated.
pub fn draw_coupler(stream: &mut RngStream, sigma: f64) -> CouplerDraw {
    debug_assert!(sigma > 0.0);
    loop {
        let z = stream.next_standard_normal();
        let level = stream.next_open_uniform() * std_normal_pdf(z);
        let r = unit_halfwidth(level);
        let v = stream.next_uniform();
        if r >= MIN_HALFWIDTH {
            let x = (r * (2.0 * v - 1.0)).clamp(-r, r);
            return CouplerDraw::from_unit(r, x, sigma);
        }
    }
}

pub fn apply_shift(draw: &CouplerDraw, s: f64) -> f64 {
    draw.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(x: f64) -> CouplerDraw {
        CouplerDraw::from_unit(1.0, x, 1.0)
    }

    #[test]
    fn density_peak_inverts_to_zero_halfwidth() {
        assert_eq!(unit_halfwidth(std_normal_pdf(0.0)), 0.0);
        assert_abs_diff_eq!(unit_halfwidth(std_normal_pdf(1.0)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(unit_halfwidth(std_normal_pdf(2.7)), 2.7, epsilon = 1e-12);
    }

    #[test]
    fn scaling_is_linear() {
        let d = CouplerDraw::from_unit(1.0, 0.5, 3.5);
        assert_eq!((d.halfwidth, d.offset, d.scale), (3.5, 1.75, 3.5));
    }

    #[test]
    fn hand_evaluated_mapping() {
        let d = unit(0.5);
        assert_eq!(apply_shift(&d, 0.5), 0.5);
        assert_eq!(apply_shift(&d, 0.0), 0.5);
        assert_eq!(apply_shift(&d, -2.0), -1.5);
        assert_eq!(apply_shift(&d, 2.5), 2.5);
        // cell boundaries are half-open on the right
        assert_eq!(apply_shift(&d, -0.5), 0.5);
        assert_eq!(apply_shift(&d, 1.5), 2.5);
    }

    #[test]
    fn draws_are_valid_and_deterministic() {
        let mut a = RngStream::new(11, 0);
        let mut b = RngStream::new(11, 0);
        for _ in 0..10_000 {
            let d = draw_coupler(&mut a, 2.0);
            assert!(d.is_valid());
            assert!(d.halfwidth >= MIN_HALFWIDTH * 2.0);
            assert_eq!(d, draw_coupler(&mut b, 2.0));
        }
        assert_eq!(a.words_consumed(), 30_000);
    }
}
