// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Canonical,
    Spin,
    Affine,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Canonical => "canonical",
            Family::Spin => "spin",
            Family::Affine => "affine",
        })
    }
}

impl Family {
    pub fn coordinate_names(self) -> [&'static str; 2] {
        match self {
            Family::Canonical | Family::Affine => ["p", "q"],
            Family::Spin => ["theta", "phi"],
        }
    }
}

/// A labelled point of a family's phase space.
///
/// Coordinates are `(p, q)` for the canonical and affine families and
/// `(theta, phi)` for spin, with `theta` the colatitude in `[0, pi]` and
/// `phi` in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<T = f64> {
    pub family: Family,
    pub coords: [T; 2],
}

impl<T: Real> PhasePoint<T> {
    pub fn canonical(p: T, q: T) -> Self {
        Self { family: Family::Canonical, coords: [p, q] }
    }

    pub fn spin(theta: T, phi: T) -> Self {
        Self { family: Family::Spin, coords: [theta, phi] }
    }

    pub fn affine(p: T, q: T) -> Self {
        Self { family: Family::Affine, coords: [p, q] }
    }

    pub fn new(family: Family, coords: [T; 2]) -> Self {
        Self { family, coords }
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.coords;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinates {a}, {b}")));
        }
        match self.family {
            Family::Canonical => Ok(()),
            Family::Affine if b > T::zero() => Ok(()),
            Family::Affine => Err(Error::InvalidPoint(format!("affine q must be positive, got {b}"))),
            Family::Spin => {
                let pi = T::lit(PI);
                if a < T::zero() || a > pi {
                    return Err(Error::InvalidPoint(format!("theta = {a} outside [0, pi]")));
                }
                if b <= -pi || b > pi {
                    return Err(Error::InvalidPoint(format!("phi = {b} outside (-pi, pi]")));
                }
                Ok(())
            }
        }
    }

    pub fn expect_family(&self, family: Family) -> Result<()> {
        if self.family == family {
            Ok(())
        } else {
            Err(Error::FamilyMismatch {
                expected: family.to_string(),
                got: self.family.to_string(),
            })
        }
    }

    pub fn cast<U: Real>(&self) -> PhasePoint<U> {
        PhasePoint {
            family: self.family,
            coords: [U::lit(self.coords[0].to_f64_lossy()), U::lit(self.coords[1].to_f64_lossy())],
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(phi: T) -> T {
    let two_pi = T::lit(2.0 * PI);
    let pi = T::lit(PI);
    let mut x = phi % two_pi;
    if x <= -pi {
        x += two_pi;
    } else if x > pi {
        x -= two_pi;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_enforced() {
        assert!(PhasePoint::affine(1.0, 0.0).validate().is_err());
        assert!(PhasePoint::affine(-3.0, 0.1).validate().is_ok());
        assert!(PhasePoint::spin(-0.1, 0.0).validate().is_err());
        assert!(PhasePoint::spin(PI, PI).validate().is_ok());
        assert!(PhasePoint::spin(1.0, -PI).validate().is_err());
        assert!(PhasePoint::<f32>::canonical(f32::NAN, 0.0).validate().is_err());
    }

    #[test]
    fn wrap_is_idempotent() {
        for k in -20..20 {
            let x = k as f64 * 0.7;
            let w = wrap_angle(x);
            assert!(w > -PI && w <= PI);
            assert!((wrap_angle(w) - w).abs() < 1e-15);
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-12 || ((x - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-12);
        }
    }
}
