//! Points on S¹, S² and S²×S¹, and the ambient embedding into ℝ⁵.
//!
//! The circle is ℝ/ℤ with angles in turns. S² is the Riemann sphere
//! ℝ² ∪ {∞} in polar coordinates; the angle `phi` is kept unwrapped so that
//! orbits can be followed through many revolutions. The ambient map sends
//! S² to the unit sphere in ℝ³ by inverse stereographic projection and S¹ to
//! the unit circle in ℝ², giving X = S²×S¹ ⊂ ℝ⁵.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

/// Dimension of the ambient space of S²×S¹.
pub const AMBIENT_DIM: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("non-finite coordinate {0}")]
    NonFinite(f64),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
}

/// A point of ℝ/ℤ, stored in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub const ZERO: CirclePoint = CirclePoint(0.0);

    pub fn turns(self) -> f64 {
        self.0
    }

    /// Wraps without checking finiteness. Callers inside the dynamics use
    /// this on values they have produced themselves.
    pub(crate) fn wrap_unchecked(t: f64) -> CirclePoint {
        let w = t.rem_euclid(1.0);
        // rem_euclid rounds tiny negatives up to exactly 1.0
        CirclePoint(if w >= 1.0 { 0.0 } else { w })
    }
}

/// Reduces `t` modulo 1 into `[0, 1)`.
pub fn wrap_circle(t: f64) -> Result<CirclePoint, ManifoldError> {
    if !t.is_finite() {
        return Err(ManifoldError::NonFinite(t));
    }
    Ok(CirclePoint::wrap_unchecked(t))
}

/// Rotation-invariant distance on ℝ/ℤ; the length of the shorter arc, in `[0, 1/2]`.
pub fn circle_distance(a: CirclePoint, b: CirclePoint) -> f64 {
    let d = (a.0 - b.0).abs();
    d.min(1.0 - d)
}

/// Distance between two angles in radians, reduced modulo 2π, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A point of S² = ℝ² ∪ {∞} in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    r: f64,
    phi: f64,
    at_infinity: bool,
}

impl PolarPoint {
    pub const ORIGIN: PolarPoint = PolarPoint { r: 0.0, phi: 0.0, at_infinity: false };
    pub const INFINITY: PolarPoint = PolarPoint { r: 0.0, phi: 0.0, at_infinity: true };

    pub fn new(r: f64, phi: f64) -> Result<PolarPoint, ManifoldError> {
        if !r.is_finite() {
            return Err(ManifoldError::NonFinite(r));
        }
        if !phi.is_finite() {
            return Err(ManifoldError::NonFinite(phi));
        }
        if r < 0.0 {
            return Err(ManifoldError::NegativeRadius(r));
        }
        Ok(Self::from_parts(r, phi))
    }

    pub(crate) fn from_parts(r: f64, phi: f64) -> PolarPoint {
        if r == 0.0 {
            PolarPoint::ORIGIN
        } else {
            PolarPoint { r, phi, at_infinity: false }
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Unwrapped angle in radians.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Angle reduced into `[0, 2π)`.
    pub fn phi_wrapped(&self) -> f64 {
        let w = self.phi.rem_euclid(TAU);
        if w >= TAU {
            0.0
        } else {
            w
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.at_infinity
    }

    pub fn is_origin(&self) -> bool {
        !self.at_infinity && self.r == 0.0
    }

    /// Cartesian coordinates of a finite point.
    pub fn cartesian(&self) -> Option<(f64, f64)> {
        if self.at_infinity {
            None
        } else {
            Some((self.r * self.phi.cos(), self.r * self.phi.sin()))
        }
    }

    /// Inverse stereographic projection onto the unit sphere in ℝ³, with ∞ at the north pole.
    pub fn sphere_coords(&self) -> [f64; 3] {
        match self.cartesian() {
            None => [0.0, 0.0, 1.0],
            Some((x, y)) => {
                let q = x * x + y * y;
                let den = q + 1.0;
                [2.0 * x / den, 2.0 * y / den, (q - 1.0) / den]
            }
        }
    }
}

/// The fixed point p = (1, 0) of the spiral map.
pub const P_POINT: PolarPoint = PolarPoint { r: 1.0, phi: 0.0, at_infinity: false };
/// The fixed point q = (-1, 0) of the spiral map.
pub const Q_POINT: PolarPoint = PolarPoint { r: 1.0, phi: PI, at_infinity: false };

/// A point (z, t) of S²×S¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductPoint {
    pub base: PolarPoint,
    pub fiber: CirclePoint,
}

impl ProductPoint {
    pub fn new(base: PolarPoint, fiber: CirclePoint) -> ProductPoint {
        ProductPoint { base, fiber }
    }

    /// The atom p₀ = (p, 0).
    pub fn p0() -> ProductPoint {
        ProductPoint::new(P_POINT, CirclePoint::ZERO)
    }
}

/// A point of ℝ⁵ lying on the image of S²×S¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientPoint {
    pub coords: [f64; AMBIENT_DIM],
}

impl AmbientPoint {
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, other: &AmbientPoint) -> f64 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Unit-circle embedding of ℝ/ℤ into ℝ².
pub fn circle_coords(t: CirclePoint) -> [f64; 2] {
    let a = TAU * t.turns();
    [a.cos(), a.sin()]
}

pub fn embed_ambient(p: &ProductPoint) -> AmbientPoint {
    let s = p.base.sphere_coords();
    let c = circle_coords(p.fiber);
    AmbientPoint { coords: [s[0], s[1], s[2], c[0], c[1]] }
}
