//! Scalar enclosure arithmetic: a `Ball` is a center plus a radius, and
//! every operation returns a ball whose interval contains the exact result
//! for all inputs drawn from the operand intervals.
//!
//! Rounding model: instead of hardware directed rounding, each operation
//! adds one relative epsilon (2^-52 of the result magnitude) to the radius,
//! on top of the propagated interval terms. Error terms of products and
//! sums are recovered exactly with fused multiply-adds where that is cheap.

use crate::{Error, Result};

const EPS: f64 = 2.220_446_049_250_313e-16; // 2^-52

/// Enclosure of a real number: the closed interval `[center - radius, center + radius]`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Ball {
    center: f64,
    radius: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

#[inline]
fn ulp_of(x: f64) -> f64 {
    EPS * x.abs()
}

impl Ball {
    /// Exact ball: radius zero.
    pub fn exact(x: f64) -> Self {
        debug_assert!(x.is_finite());
        Ball { center: x, radius: 0.0 }
    }

    /// Ball with an explicit radius (must be nonnegative and finite).
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() || radius < 0.0 {
            return Err(Error::NonFinite("Ball::new"));
        }
        Ok(Ball { center, radius })
    }

    /// Enclosure of an irrational or otherwise inexact `f64` value:
    /// one ulp of slack around the given center.
    pub fn inexact(x: f64) -> Self {
        Ball { center: x, radius: ulp_of(x) }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lower(&self) -> f64 {
        self.center - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.center + self.radius
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.radius
    }

    /// Upper bound on |x| over the interval.
    pub fn abs_upper(&self) -> f64 {
        self.center.abs() + self.radius
    }

    fn finished(center: f64, radius: f64, op: &'static str) -> Result<Ball> {
        let radius = radius + ulp_of(center);
        if !center.is_finite() || !radius.is_finite() {
            return Err(Error::NonFinite(op));
        }
        Ok(Ball { center, radius })
    }

    pub fn add(&self, other: &Ball) -> Result<Ball> {
        let (s, e) = two_sum(self.center, other.center);
        Ball::finished(s, self.radius + other.radius + e.abs(), "ball add")
    }

    pub fn sub(&self, other: &Ball) -> Result<Ball> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Ball {
        Ball { center: -self.center, radius: self.radius }
    }

    pub fn mul(&self, other: &Ball) -> Result<Ball> {
        let (p, e) = two_prod(self.center, other.center);
        let r = self.center.abs() * other.radius
            + other.center.abs() * self.radius
            + self.radius * other.radius
            + e.abs();
        // the cross terms are computed in rounded arithmetic; pad by a few ulps
        Ball::finished(p, r * (1.0 + 4.0 * EPS), "ball mul")
    }

    pub fn div(&self, other: &Ball) -> Result<Ball> {
        let d = other.center.abs() - other.radius;
        if d <= 0.0 {
            return Err(Error::BallDivByZero {
                center: other.center,
                radius: other.radius,
            });
        }
        let q = self.center / other.center;
        // |a/b - c_a/c_b| <= (|c_a| r_b + |c_b| r_a) / (|c_b| (|c_b| - r_b))
        let r = (self.center.abs() * other.radius + other.center.abs() * self.radius)
            / (other.center.abs() * d);
        Ball::finished(q, r * (1.0 + 8.0 * EPS) + ulp_of(q), "ball div")
    }

    pub fn sqrt(&self) -> Result<Ball> {
        let lo = self.lower();
        if lo <= 0.0 {
            return Err(Error::BallDomain {
                op: "sqrt",
                center: self.center,
                radius: self.radius,
            });
        }
        let s = self.center.sqrt();
        // mean value bound: |sqrt(x) - sqrt(c)| <= r / (2 sqrt(lo))
        let r = self.radius / (2.0 * lo.sqrt());
        Ball::finished(s, r * (1.0 + 4.0 * EPS) + ulp_of(s), "ball sqrt")
    }

    pub fn abs(&self) -> Ball {
        // | |x| - |c| | <= |x - c| <= r for every x
        Ball { center: self.center.abs(), radius: self.radius }
    }

    pub fn ln(&self) -> Result<Ball> {
        let lo = self.lower();
        if lo <= 0.0 {
            return Err(Error::BallDomain {
                op: "log",
                center: self.center,
                radius: self.radius,
            });
        }
        let l = self.center.ln();
        let r = self.radius / lo;
        // libm ln is faithful to ~1 ulp of the result
        Ball::finished(l, r * (1.0 + 4.0 * EPS) + 2.0 * ulp_of(l), "ball log")
    }

    pub fn exp(&self) -> Result<Ball> {
        let e = self.center.exp();
        if !e.is_finite() {
            return Err(Error::NonFinite("ball exp"));
        }
        // sup over the interval: e^c (e^r - 1) >= |e^x - e^c|
        let r = e * self.radius.exp_m1();
        Ball::finished(e, r * (1.0 + 4.0 * EPS) + 2.0 * ulp_of(e), "ball exp")
    }

    /// Smallest ball containing both operands (used when folding tails).
    pub fn hull(&self, other: &Ball) -> Ball {
        let lo = self.lower().min(other.lower());
        let hi = self.upper().max(other.upper());
        let c = 0.5 * (lo + hi);
        let r = (hi - c).max(c - lo) + ulp_of(c);
        Ball { center: c, radius: r }
    }
}

impl From<f64> for Ball {
    fn from(x: f64) -> Self {
        Ball::exact(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_integer_add() {
        let one = Ball::exact(1.0);
        let two = one.add(&one).unwrap();
        assert!(two.contains(2.0));
    }

    #[test]
    fn inexact_decimal_product_has_positive_radius() {
        // 0.1 is not representable in binary, so the product interval must
        // have positive width around 1
        let a = Ball::inexact(0.1);
        let b = Ball::exact(10.0);
        let p = a.mul(&b).unwrap();
        assert!(p.contains(1.0));
        assert!(p.radius() > 0.0);
    }

    #[test]
    fn div_by_zero_straddling_interval_fails() {
        let a = Ball::exact(1.0);
        let b = Ball::new(0.5, 1.0).unwrap();
        assert!(a.div(&b).is_err());
    }

    #[test]
    fn sqrt_of_interval_touching_zero_fails() {
        let a = Ball::new(0.5, 0.5).unwrap();
        assert!(a.sqrt().is_err());
        let b = Ball::new(1.0, 0.5).unwrap();
        assert!(b.sqrt().is_ok());
    }

    #[test]
    fn log_domain() {
        assert!(Ball::exact(0.0).ln().is_err());
        assert!(Ball::exact(-1.0).ln().is_err());
        let l = Ball::exact(std::f64::consts::E).ln().unwrap();
        assert!(l.contains(1.0));
    }

    #[test]
    fn abs_is_valid_for_straddling_intervals() {
        let a = Ball::new(-0.25, 1.0).unwrap();
        let b = a.abs();
        for x in [-1.25_f64, -0.5, 0.0, 0.3, 0.75] {
            assert!(b.contains(x.abs()), "|{x}| not contained");
        }
    }

    #[test]
    fn hull_contains_both() {
        let a = Ball::new(1.0, 0.5).unwrap();
        let b = Ball::new(-2.0, 0.25).unwrap();
        let h = a.hull(&b);
        assert!(h.contains(a.lower()) && h.contains(a.upper()));
        assert!(h.contains(b.lower()) && h.contains(b.upper()));
    }
}
