//! Scalar abstraction shared by the plain `f64` evaluation path and the
//! reverse-mode differentiation path in [`crate::ad`].
//!
//! Every discrete quantity that enters the path energy (manifold maps,
//! covariant differences, quadrature) is written once against [`Real`], so the
//! gradient used by the boundary value solver differentiates exactly the
//! function that is evaluated.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Debug
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
{
    fn cst(x: f64) -> Self;

    fn val(self) -> f64;

    /// A unary function with value `f` and derivative `df` at `self`.
    fn lift(self, f: f64, df: f64) -> Self;

    /// A binary function with value `f` and partials `dx`, `dy` at `(self, other)`.
    fn lift2(self, other: Self, f: f64, dx: f64, dy: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn sqrt(self) -> Self {
        let s = self.val().sqrt();
        self.lift(s, 0.5 / s)
    }

    fn sin(self) -> Self {
        let x = self.val();
        self.lift(x.sin(), x.cos())
    }

    fn cos(self) -> Self {
        let x = self.val();
        self.lift(x.cos(), -x.sin())
    }

    fn sinh(self) -> Self {
        let x = self.val();
        self.lift(x.sinh(), x.cosh())
    }

    fn cosh(self) -> Self {
        let x = self.val();
        self.lift(x.cosh(), x.sinh())
    }

    fn acosh(self) -> Self {
        let x = self.val();
        self.lift(x.acosh(), 1.0 / (x * x - 1.0).sqrt())
    }

    fn atan2(self, x: Self) -> Self {
        let (a, b) = (self.val(), x.val());
        let r2 = a * a + b * b;
        self.lift2(x, a.atan2(b), b / r2, -a / r2)
    }

    fn powi(self, n: i32) -> Self {
        let x = self.val();
        let d = if n == 0 { 0.0 } else { n as f64 * x.powi(n - 1) };
        self.lift(x.powi(n), d)
    }

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
}

impl Real for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }

    #[inline]
    fn val(self) -> f64 {
        self
    }

    #[inline]
    fn lift(self, f: f64, _df: f64) -> Self {
        f
    }

    #[inline]
    fn lift2(self, _other: Self, f: f64, _dx: f64, _dy: f64) -> Self {
        f
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn sinh(self) -> Self {
        f64::sinh(self)
    }

    fn cosh(self) -> Self {
        f64::cosh(self)
    }

    fn acosh(self) -> Self {
        f64::acosh(self)
    }

    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }

    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Small helpers on ambient coordinate vectors.
pub(crate) mod vecops {
    use super::Real;

    pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
        let mut s = T::zero();
        for (x, y) in a.iter().zip(b) {
            s += *x * *y;
        }
        s
    }

    pub fn axpy<T: Real>(alpha: T, x: &[T], y: &[T]) -> Vec<T> {
        x.iter().zip(y).map(|(a, b)| alpha * *a + *b).collect()
    }

    pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| *x + *y).collect()
    }

    pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| *x - *y).collect()
    }

    pub fn scale<T: Real>(alpha: T, a: &[T]) -> Vec<T> {
        a.iter().map(|x| alpha * *x).collect()
    }

    pub fn lincomb<T: Real>(terms: &[(f64, &[T])]) -> Vec<T> {
        let m = terms[0].1.len();
        let mut out = vec![T::zero(); m];
        for (c, v) in terms {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += *x * *c;
            }
        }
        out
    }

    pub fn norm2(a: &[f64]) -> f64 {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}
