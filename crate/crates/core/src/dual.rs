//! Minimal forward-mode dual numbers, nestable for second derivatives.
//!
//! The kernel formulas are written once over [`Scalar`] and evaluated with
//! `f64`, `Dual<f64>` (first derivatives) or `Dual<Dual<f64>>` (second
//! derivatives). Branch decisions inside kernels are always taken on the
//! primal value so that every branch stays differentiation-compatible.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and dual numbers; exactly the operations
/// the kernel evaluations need.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    /// Innermost real part.
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    /// Multiplication by a plain constant.
    fn scale(self, c: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Dual number `re + du * eps` with `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub du: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, du: T) -> Self {
        Self { re, du }
    }

    #[inline]
    pub fn constant(c: f64) -> Self {
        Self {
            re: T::from_f64(c),
            du: T::zero(),
        }
    }

    /// Independent variable seeded with unit derivative.
    #[inline]
    pub fn variable(v: T) -> Self {
        Self {
            re: v,
            du: T::one(),
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.du + rhs.du)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.du - rhs.du)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.re * rhs.re, self.re * rhs.du + self.du * rhs.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let re = self.re * inv;
        Self::new(re, (self.du - re * rhs.du) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.du)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn from_f64(c: f64) -> Self {
        Self::constant(c)
    }

    #[inline]
    fn value(self) -> f64 {
        self.re.value()
    }

    #[inline]
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Self::new(r, self.du / r.scale(2.0))
    }

    #[inline]
    fn ln(self) -> Self {
        Self::new(self.re.ln(), self.du / self.re)
    }

    #[inline]
    fn powi(self, k: i32) -> Self {
        Self::new(
            self.re.powi(k),
            self.du * self.re.powi(k - 1).scale(k as f64),
        )
    }

    #[inline]
    fn powf(self, p: f64) -> Self {
        Self::new(
            self.re.powf(p),
            self.du * self.re.powf(p - 1.0).scale(p),
        )
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        Self::new(self.re.scale(c), self.du.scale(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample<T: Scalar>(x: T) -> T {
        // x^3 ln x + sqrt(x) / x^{-2} = x^3 ln x + x^{5/2}
        x.powi(3) * x.ln() + x.sqrt() / x.powi(-2)
    }

    #[test]
    fn first_derivative_matches_hand_formula() {
        let x = 1.7_f64;
        let d = sample(Dual::<f64>::variable(x));
        let expected = 3.0 * x * x * x.ln() + x * x + 2.5 * x.powf(1.5);
        assert!((d.re - sample(x)).abs() < 1e-15);
        assert!((d.du - expected).abs() < 1e-13);
    }

    #[test]
    fn nested_second_derivative() {
        let x = 1.3_f64;
        // seed the same variable in both levels
        let v = Dual::<Dual<f64>>::new(Dual::variable(x), Dual::<f64>::one());
        let d = sample(v);
        let expected = 6.0 * x * x.ln() + 5.0 * x + 2.5 * 1.5 * x.powf(0.5);
        assert!((d.du.du - expected).abs() < 1e-12);
    }

    #[test]
    fn mixed_partial_symmetry() {
        // f(a, b) = a^2 b^3 + ln(a b); d2f/dadb = 6 a b^2
        let f = |a: Dual<Dual<f64>>, b: Dual<Dual<f64>>| {
            a.powi(2) * b.powi(3) + (a * b).ln()
        };
        let (a0, b0) = (0.9, 2.1);
        let a = Dual::<Dual<f64>>::new(Dual::variable(a0), Dual::zero());
        let b = Dual::<Dual<f64>>::new(Dual::constant(b0), Dual::one());
        let d = f(a, b);
        assert!((d.du.du - 6.0 * a0 * b0 * b0).abs() < 1e-12);
    }
}
