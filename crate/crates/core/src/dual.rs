//! Forward-mode dual numbers.
//!
//! [`Dual<T>`] carries a value and one directional derivative. Nesting
//! (`Dual<Dual<f64>>`) gives mixed second derivatives; every nesting level is
//! a distinct type, so seeds placed at different levels never get confused.
//!
//! All model code in this crate is written against the [`Scalar`] trait so the
//! same closed-form expressions evaluate on `f64` and on any dual nesting.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Minimal real-number interface needed by the dynamics and control code.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    fn cst(v: f64) -> Self;
    /// Innermost real part.
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn powi2(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// A constant (zero derivative).
    #[inline]
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    /// An independent variable (unit derivative).
    #[inline]
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    #[inline]
    fn re(&self) -> f64 {
        self.re.re()
    }
    #[inline]
    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        Dual::new(s, c * self.eps)
    }
    #[inline]
    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        Dual::new(c, -(s * self.eps))
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (r * 2.0))
    }
    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.re.sin_cos();
        (Dual::new(s, c * self.eps), Dual::new(c, -(s * self.eps)))
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let re = self.re * inv;
        Dual::new(re, (self.eps - re * rhs.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Dual::new(self.re + rhs, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Dual::new(self.re - rhs, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Dual::new(self.re * rhs, self.eps * rhs)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Dual::new(self.re / rhs, self.eps / rhs)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

/// Lift a real slice into constants of type `S`.
pub fn lift<S: Scalar>(xs: &[f64]) -> Vec<S> {
    xs.iter().map(|&x| S::cst(x)).collect()
}

/// Seed `base + ε·direction` one level above `S`.
pub fn seed<S: Scalar>(base: &[S], direction: &[S]) -> Vec<Dual<S>> {
    debug_assert_eq!(base.len(), direction.len());
    base.iter()
        .zip(direction)
        .map(|(&b, &d)| Dual::new(b, d))
        .collect()
}

/// Directional derivative of a vector function: `d/dε f(x + ε·dir)` at ε = 0.
pub fn directional<S, F>(f: F, x: &[S], dir: &[S]) -> Vec<S>
where
    S: Scalar,
    F: FnOnce(&[Dual<S>]) -> Vec<Dual<S>>,
{
    f(&seed(x, dir)).into_iter().map(|v| v.eps).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0);
        let y = x * x / (x + 1.0);
        // d/dx x²/(x+1) = (x² + 2x)/(x+1)²
        assert!((y.eps - 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn trig_derivatives() {
        let x = Dual::variable(0.7_f64);
        assert!((x.sin().eps - 0.7_f64.cos()).abs() < 1e-15);
        assert!((x.cos().eps + 0.7_f64.sin()).abs() < 1e-15);
        assert!((x.sqrt().eps - 0.5 / 0.7_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nested_gives_mixed_second_derivative() {
        // f(x, y) = sin(x)·y², ∂²f/∂x∂y = 2y·cos(x)
        let (x0, y0) = (0.3, 1.7);
        let x: Dual<Dual<f64>> = Dual::new(Dual::variable(x0), Dual::constant(0.0));
        let y: Dual<Dual<f64>> = Dual::new(Dual::constant(y0), Dual::constant(1.0));
        let f = x.sin() * y * y;
        assert!((f.eps.eps - 2.0 * y0 * x0.cos()).abs() < 1e-14);
        assert!((f.re.eps - y0 * y0 * x0.cos()).abs() < 1e-14);
        assert!((f.eps.re - 2.0 * y0 * x0.sin()).abs() < 1e-14);
    }

    #[test]
    fn directional_matches_central_difference() {
        let f = |v: &[Dual<f64>]| vec![v[0] * v[1].sin(), v[0].cos() + v[1] * v[1]];
        let x = [0.4, -1.1];
        let dir = [0.3, 0.8];
        let d = directional(f, &x, &dir);
        let g = |v: [f64; 2]| [v[0] * v[1].sin(), v[0].cos() + v[1] * v[1]];
        let h = 1e-6;
        let p = g([x[0] + h * dir[0], x[1] + h * dir[1]]);
        let m = g([x[0] - h * dir[0], x[1] - h * dir[1]]);
        for k in 0..2 {
            let fd = (p[k] - m[k]) / (2.0 * h);
            assert!((d[k] - fd).abs() < 1e-8);
        }
    }
}
