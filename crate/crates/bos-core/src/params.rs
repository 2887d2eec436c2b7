//! Validated model parameters (a, b) with the regime gate 2a + b < 2.

use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// Validated parameter pair of the operator
/// `L y = d/dx((1 - a cos x) y + b sin x y')`.
///
/// Admissible region: `a >= 0`, `b > 0`, `2a + b < 2` (strict). Everything
/// downstream (bounded invertibility of M, the factorization identity, the
/// Hilbert-Schmidt resolvent) lives inside this region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams<T: Real> {
    a: T,
    b: T,
}

impl<T: Real> OperatorParams<T> {
    /// Validate and construct. Rejects `a < 0`, `b <= 0` and `2a + b >= 2`.
    pub fn new(a: T, b: T) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(CoreError::InvalidParams(format!(
                "a and b must be finite, got a = {a}, b = {b}"
            )));
        }
        if a < T::zero() {
            return Err(CoreError::InvalidParams(format!("a = {a} < 0")));
        }
        if b <= T::zero() {
            return Err(CoreError::InvalidParams(format!("b = {b} <= 0")));
        }
        let two = T::of(2.0);
        if two * a + b >= two {
            return Err(CoreError::InvalidParams(format!(
                "2a + b = {} >= 2 (regime requires strict inequality)",
                two * a + b
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// Distance 2 - (2a + b) > 0 to the regime boundary.
    pub fn margin(&self) -> T {
        T::of(2.0) - (T::of(2.0) * self.a + self.b)
    }

    /// a = 0 switches off the gravity-drainage coupling; several rigorous
    /// spectral statements hold only there, so reports flag it.
    pub fn is_degenerate_drainage(&self) -> bool {
        self.a == T::zero()
    }

    /// Net power of t of the inversion-kernel integrand near t = 0:
    /// (1 - a)/b - 1. Square-integrability of the kernel requires it to
    /// exceed -1/2, which is equivalent to 2a + b < 2.
    pub fn zero_exponent(&self) -> T {
        (T::one() - self.a) / self.b - T::one()
    }

    /// Divergence rate -(1 + a)/b of the kernel integral near x = +-pi.
    pub fn pi_exponent(&self) -> T {
        -(T::one() + self.a) / self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_interior_point_with_margin() {
        let p = OperatorParams::new(0.3, 1.0).unwrap();
        assert!((p.margin() - 0.4f64).abs() < 1e-15);
    }

    #[test]
    fn rejects_boundary_and_outside() {
        // 2a + b = 2 exactly: not strict.
        assert!(OperatorParams::new(0.0, 2.0).is_err());
        assert!(OperatorParams::new(0.5, 1.5).is_err());
        assert!(OperatorParams::new(-0.1, 1.0).is_err());
        assert!(OperatorParams::new(0.3, 0.0).is_err());
        assert!(OperatorParams::new(0.3, -1.0).is_err());
        assert!(OperatorParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn degenerate_drainage_flag() {
        assert!(OperatorParams::new(0.0, 1.0).unwrap().is_degenerate_drainage());
        assert!(!OperatorParams::new(0.1, 1.0).unwrap().is_degenerate_drainage());
    }

    #[test]
    fn kernel_admissibility_matches_regime_gate() {
        // zero_exponent > -1/2 iff 2a + b < 2; scan a grid straddling the line.
        let mut a = 0.0f64;
        while a <= 1.0 {
            let mut b = 0.05f64;
            while b <= 2.2 {
                let accepted = OperatorParams::new(a, b).is_ok();
                let admissible = (1.0 - a) / b - 1.0 > -0.5;
                let in_region = a >= 0.0 && b > 0.0 && 2.0 * a + b < 2.0;
                assert_eq!(accepted, in_region, "gate mismatch at ({a}, {b})");
                // Skip the fp hairline of the boundary for the kernel implication.
                if in_region && (2.0 - (2.0 * a + b)).abs() > 1e-9 {
                    assert!(admissible, "kernel not admissible at accepted ({a}, {b})");
                }
                b += 0.05;
            }
            a += 0.05;
        }
    }
}
