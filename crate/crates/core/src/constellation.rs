//! Unit-energy PSK constellations.
//!
//! Every symbol alphabet in this crate lives on the unit circle; power
//! allocation happens outside the constellation via amplitude scaling.
//! Points are indexed counter-clockwise starting from the constellation's
//! reference angle.

use num_complex::Complex64;

use crate::error::{invalid_input, Result};

/// Magnitude tolerance for the unit-energy invariant.
const UNIT_TOL: f64 = 1e-12;

/// Minimum pairwise distance below which two points are considered duplicated.
const DISTINCT_TOL: f64 = 1e-9;

/// Returns the `m`-th point of an 8-PSK constellation rotated by `rotation`
/// radians: `exp(j*(m*pi/4 + rotation))`.
pub fn psk8_point(m: usize, rotation: f64) -> Result<Complex64> {
    if m >= 8 {
        return Err(invalid_input!("8-PSK index {m} out of range (expected 0..8)"));
    }
    Ok(Complex64::from_polar(1.0, m as f64 * std::f64::consts::FRAC_PI_4 + rotation))
}

/// An indexed set of unit-magnitude symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    rotation: f64,
}

impl Constellation {
    /// Builds a constellation from explicit points.
    ///
    /// Every point must have magnitude 1 within `1e-12` and all points must
    /// be distinct.
    pub fn new(points: Vec<Complex64>, rotation: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid_input!("constellation must contain at least one point"));
        }
        for (m, p) in points.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(invalid_input!("constellation point {m} is not finite"));
            }
            if (p.norm() - 1.0).abs() > UNIT_TOL {
                return Err(invalid_input!(
                    "constellation point {m} has magnitude {} (expected 1 within {UNIT_TOL:e})",
                    p.norm()
                ));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if (points[i] - points[j]).norm() < DISTINCT_TOL {
                    return Err(invalid_input!("constellation points {i} and {j} coincide"));
                }
            }
        }
        Ok(Self { points, rotation })
    }

    /// 8-PSK rotated by `rotation` radians: point `m` is
    /// `exp(j*(m*pi/4 + rotation))`.
    pub fn psk8(rotation: f64) -> Self {
        let points = (0..8).map(|m| psk8_point(m, rotation).unwrap()).collect();
        Self { points, rotation }
    }

    /// 4-PSK rotated by `rotation` radians: point `m` is
    /// `exp(j*(pi/4 + m*pi/2 + rotation))`, i.e. the diagonal QPSK layout.
    pub fn qpsk(rotation: f64) -> Self {
        let points = (0..4)
            .map(|m| {
                Complex64::from_polar(
                    1.0,
                    std::f64::consts::FRAC_PI_4
                        + m as f64 * std::f64::consts::FRAC_PI_2
                        + rotation,
                )
            })
            .collect();
        Self { points, rotation }
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when the constellation has no points (never holds for a
    /// successfully constructed value).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The point at `index`, or an error when out of range.
    pub fn point(&self, index: usize) -> Result<Complex64> {
        self.points.get(index).copied().ok_or_else(|| {
            invalid_input!(
                "constellation index {index} out of range (size {})",
                self.points.len()
            )
        })
    }

    /// All points, indexed by symbol label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// The rotation this constellation was built with.
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// Smallest distance between two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min((self.points[i] - self.points[j]).norm());
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    const EPS: f64 = 1e-12;

    fn assert_close(a: Complex64, b: Complex64) {
        assert!(
            (a - b).norm() < EPS,
            "expected {b}, got {a} (|diff| = {})",
            (a - b).norm()
        );
    }

    #[test]
    fn psk8_points_match_eighth_roots_of_unity() {
        assert_close(psk8_point(0, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        assert_close(psk8_point(2, 0.0).unwrap(), Complex64::new(0.0, 1.0));
        assert_close(
            psk8_point(3, 0.0).unwrap(),
            Complex64::new(-SQRT_2 / 2.0, SQRT_2 / 2.0),
        );
        assert_close(psk8_point(4, 0.0).unwrap(), Complex64::new(-1.0, 0.0));
        assert_close(psk8_point(6, 0.0).unwrap(), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn psk8_rejects_out_of_range_index() {
        assert!(psk8_point(8, 0.0).is_err());
    }

    #[test]
    fn psk8_rotation_shifts_every_point() {
        let rot = FRAC_PI_8;
        let plain = Constellation::psk8(0.0);
        let rotated = Constellation::psk8(rot);
        let phase = Complex64::from_polar(1.0, rot);
        for m in 0..8 {
            assert_close(rotated.point(m).unwrap(), plain.point(m).unwrap() * phase);
        }
        assert_close(
            rotated.point(0).unwrap(),
            Complex64::new(0.9238795325112867, 0.3826834323650898),
        );
    }

    #[test]
    fn qpsk_sits_on_the_diagonals() {
        let q = Constellation::qpsk(0.0);
        assert_eq!(q.len(), 4);
        assert_close(q.point(0).unwrap(), Complex64::new(SQRT_2 / 2.0, SQRT_2 / 2.0));
        assert_close(q.point(1).unwrap(), Complex64::new(-SQRT_2 / 2.0, SQRT_2 / 2.0));
        assert_close(q.point(2).unwrap(), Complex64::new(-SQRT_2 / 2.0, -SQRT_2 / 2.0));
        assert_close(q.point(3).unwrap(), Complex64::new(SQRT_2 / 2.0, -SQRT_2 / 2.0));
    }

    #[test]
    fn all_points_have_unit_magnitude() {
        for c in [Constellation::psk8(0.0), Constellation::psk8(0.3), Constellation::qpsk(0.1)] {
            for p in c.points() {
                assert!((p.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn psk8_min_distance_is_two_sin_pi_over_eight() {
        let c = Constellation::psk8(0.0);
        let expected = 2.0 * (std::f64::consts::PI / 8.0).sin();
        assert!((c.min_distance() - expected).abs() < 1e-12);
        // The squared minimum distance is the 2 - sqrt(2) that drives the
        // mid-segment of the distance analysis.
        assert!((c.min_distance().powi(2) - (2.0 - SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn new_rejects_non_unit_and_duplicate_points() {
        let err = Constellation::new(vec![Complex64::new(0.5, 0.0)], 0.0);
        assert!(err.is_err(), "non-unit magnitude must be rejected");
        let err = Constellation::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            0.0,
        );
        assert!(err.is_err(), "duplicated points must be rejected");
        assert!(Constellation::new(vec![], 0.0).is_err(), "empty set must be rejected");
    }

    #[test]
    fn point_errors_out_of_range() {
        let c = Constellation::qpsk(0.0);
        assert!(c.point(4).is_err());
    }
}
