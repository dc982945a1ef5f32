//! Spatial dimension with its attached normalization constants.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Dimension `n >= 2` with the unit-ball volume `omega_n` and the Stokes
/// fundamental-solution coefficient `kappa` computed once and cached.
///
/// `omega_n = 2 pi^{n/2} / (n Gamma(n/2))`, `kappa = 1/(2n(n-2) omega_n)`
/// for `n >= 3` and `kappa = 1/(4 pi)` for `n = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    n: usize,
    omega: f64,
    kappa: f64,
}

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension { n });
        }
        let omega = unit_ball_volume(n);
        let kappa = if n == 2 {
            1.0 / (4.0 * PI)
        } else {
            1.0 / (2.0 * n as f64 * (n as f64 - 2.0) * omega)
        };
        Ok(Self { n, omega, kappa })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Volume of the unit ball in `R^n`.
    #[inline]
    pub fn omega(&self) -> f64 {
        self.omega
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Area of the unit sphere `S^{n-1}`, which equals `n omega_n`.
    #[inline]
    pub fn sphere_area(&self) -> f64 {
        self.n as f64 * self.omega
    }
}

/// `|B_1| = 2 pi^{n/2} / (n Gamma(n/2))`.
pub fn unit_ball_volume(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / (n as f64 * gamma_half(n))
}

/// `Gamma(k/2)` for integer `k >= 1`, exact up to rounding.
fn gamma_half(k: usize) -> f64 {
    if k % 2 == 0 {
        // Gamma(m) = (m-1)!
        factorial(k / 2 - 1)
    } else {
        // Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!)
        let m = (k - 1) / 2;
        factorial(2 * m) * PI.sqrt() / (4f64.powi(m as i32) * factorial(m))
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes_match_closed_forms() {
        let cases = [
            (2, PI),
            (3, 4.0 * PI / 3.0),
            (4, PI * PI / 2.0),
            (5, 8.0 * PI * PI / 15.0),
        ];
        for (n, expected) in cases {
            let d = Dimension::new(n).unwrap();
            assert!((d.omega() - expected).abs() < 1e-14 * expected);
        }
    }

    #[test]
    fn kappa_values() {
        let d2 = Dimension::new(2).unwrap();
        assert!((d2.kappa() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let d3 = Dimension::new(3).unwrap();
        // 1/(2*3*1*omega_3) = 1/(8 pi)
        assert!((d3.kappa() - 1.0 / (8.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(Dimension::new(1).is_err());
        assert!(Dimension::new(0).is_err());
    }
}
