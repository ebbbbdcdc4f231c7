//! Truncated Taylor series on a complex disk `|x| < rho`, with the weighted
//! l1 norm `sum_n |f_n| rho^n`. The space is a Banach algebra under the
//! pointwise product, which is what makes norm bookkeeping for compositions
//! of matrix functions straightforward.
//!
//! Two flavors share the representation: [`Series`] over plain `f64`
//! coefficients (the production path), and [`BallSeries`] over [`Ball`]
//! enclosures (containment-style checks). In plain mode the `tail` field is
//! carried as a diagnostic only; in ball mode it is a genuine remainder
//! bound on the discarded l1 mass.

use crate::ball::Ball;
use crate::{Error, Result};

/// Relative slack accepted on domain inequalities, to absorb f64 rounding
/// at boundary configurations like `rho_F = rho_G / alpha*`.
const DOMAIN_SLACK: f64 = 1e-9;

/// Relative parity-drift tolerance: beyond this, projection is lossy.
pub const PARITY_TOL: f64 = 1e-11;

/// Parity class of a function on a symmetric disk.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    #[inline]
    fn keeps(self, index: usize) -> bool {
        match self {
            Parity::Even => index % 2 == 0,
            Parity::Odd => index % 2 == 1,
        }
    }
}

/// Truncated Taylor polynomial `sum_{n<=N} f_n x^n` on the disk of radius
/// `rho`, plus a nonnegative bound on the l1 mass of discarded degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    rho: f64,
    coeffs: Vec<f64>,
    tail: f64,
}

impl Series {
    pub fn new(rho: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_tail(rho, coeffs, 0.0)
    }

    pub fn with_tail(rho: f64, coeffs: Vec<f64>, tail: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NonFinite("Series radius"));
        }
        if tail < 0.0 || !tail.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Series coefficients"));
        }
        if coeffs.is_empty() {
            return Err(Error::NonFinite("Series needs at least one coefficient"));
        }
        Ok(Series { rho, coeffs, tail })
    }

    pub fn zero(rho: f64, degree: usize) -> Self {
        Series { rho, coeffs: vec![0.0; degree + 1], tail: 0.0 }
    }

    pub fn constant(rho: f64, value: f64, degree: usize) -> Self {
        let mut s = Series::zero(rho, degree);
        s.coeffs[0] = value;
        s
    }

    /// The monomial `c x^k`.
    pub fn monomial(rho: f64, k: usize, c: f64, degree: usize) -> Self {
        let mut s = Series::zero(rho, degree);
        if k <= degree {
            s.coeffs[k] = c;
        } else {
            s.tail = c.abs() * rho.powi(k as i32);
        }
        s
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Drop the tail diagnostic (used by iterative algorithms that would
    /// otherwise compound it meaninglessly).
    pub fn strip_tail(&self) -> Series {
        Series { rho: self.rho, coeffs: self.coeffs.clone(), tail: 0.0 }
    }

    /// Add to the tail diagnostic.
    pub fn with_extra_tail(&self, extra: f64) -> Series {
        Series { rho: self.rho, coeffs: self.coeffs.clone(), tail: self.tail + extra }
    }

    /// Weighted l1 norm `sum_n |f_n| rho^n + tail`.
    pub fn norm(&self) -> f64 {
        let mut sum = 0.0;
        let mut p = 1.0;
        for &c in &self.coeffs {
            sum += c.abs() * p;
            p *= self.rho;
        }
        sum + self.tail
    }

    fn check_same_rho(&self, other: &Series) -> Result<()> {
        if (self.rho - other.rho).abs() > DOMAIN_SLACK * self.rho {
            return Err(Error::RadiusMismatch(self.rho, other.rho));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_same_rho(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeff(k) + other.coeff(k);
        }
        Ok(Series { rho: self.rho, coeffs, tail: self.tail + other.tail })
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Series {
        Series {
            rho: self.rho,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
            tail: self.tail * c.abs(),
        }
    }

    /// Cauchy product truncated at the operands' degree; overflowed degrees
    /// are folded into the tail as their l1 mass.
    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check_same_rho(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let full = self.coeffs.len() + other.coeffs.len() - 1;
        let mut prod = vec![0.0; full];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                prod[i + j] += a * b;
            }
        }
        let mut tail = self.norm() * other.tail
            + other.norm() * self.tail
            + self.tail * other.tail;
        let mut p = self.rho.powi(n as i32);
        for &c in &prod[n..] {
            tail += c.abs() * p;
            p *= self.rho;
        }
        prod.truncate(n);
        Ok(Series { rho: self.rho, coeffs: prod, tail })
    }

    /// Re-expand on a (smaller) disk; coefficients are unchanged.
    pub fn restrict(&self, rho_new: f64) -> Result<Series> {
        if rho_new > self.rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                op: "restrict",
                detail: format!("rho {} exceeds stored radius {}", rho_new, self.rho),
            });
        }
        Ok(Series { rho: rho_new, coeffs: self.coeffs.clone(), tail: self.tail })
    }

    /// Substitute the affine argument: returns `g` with `g(x) = f(a x + b)` as
    /// a series on the disk of radius `rho_out`, by Horner re-expansion.
    /// Requires the affine image of the output disk to lie inside `f`'s disk.
    pub fn affine(&self, a: f64, b: f64, rho_out: f64) -> Result<Series> {
        let reach = a.abs() * rho_out + b.abs();
        if reach > self.rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                op: "affine substitution",
                detail: format!(
                    "|a| rho_out + |b| = {:.6} exceeds input radius {:.6}",
                    reach, self.rho
                ),
            });
        }
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[n - 1];
        for &fk in self.coeffs[..n - 1].iter().rev() {
            // out <- out * (a x + b) + fk
            for i in (1..n).rev() {
                out[i] = b * out[i] + a * out[i - 1];
            }
            out[0] = b * out[0] + fk;
        }
        // the remainder of f, evaluated on the image disk, keeps l1 mass
        // at most tail since |a| rho_out + |b| <= rho
        Ok(Series { rho: rho_out, coeffs: out, tail: self.tail })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.abs() > self.rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::OutsideDisk { x, rho: self.rho });
        }
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        Ok(acc)
    }

    /// l1 mass sitting on the wrong-parity coefficients.
    pub fn parity_residual(&self, parity: Parity) -> f64 {
        let mut mass = 0.0;
        let mut p = 1.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if !parity.keeps(k) {
                mass += c.abs() * p;
            }
            p *= self.rho;
        }
        mass
    }

    /// Zero out the wrong-parity coefficients; reports the discarded mass.
    pub fn project_parity(&self, parity: Parity) -> (Series, f64) {
        let mut out = self.clone();
        let mut mass = 0.0;
        let mut p = 1.0;
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            if !parity.keeps(k) {
                mass += c.abs() * p;
                *c = 0.0;
            }
            p *= self.rho;
        }
        (out, mass)
    }

    /// Parity projection that refuses to discard more than `PARITY_TOL`
    /// relative mass; used inside the renormalization pipeline.
    pub fn project_parity_checked(&self, parity: Parity) -> Result<Series> {
        let (out, mass) = self.project_parity(parity);
        let tol = PARITY_TOL * self.norm().max(1e-300);
        if mass > tol {
            return Err(Error::LossyParity { discarded: mass, tol });
        }
        Ok(out)
    }
}

/// Truncated Taylor series with [`Ball`] coefficients: encloses every
/// analytic function whose coefficients lie in the balls and whose
/// remainder has l1 mass at most `tail`.
#[derive(Clone, Debug)]
pub struct BallSeries {
    rho: f64,
    coeffs: Vec<Ball>,
    tail: f64,
}

impl BallSeries {
    pub fn from_plain(s: &Series) -> Self {
        BallSeries {
            rho: s.rho,
            coeffs: s.coeffs.iter().map(|&c| Ball::exact(c)).collect(),
            tail: s.tail,
        }
    }

    pub fn zero(rho: f64, degree: usize) -> Self {
        BallSeries { rho, coeffs: vec![Ball::exact(0.0); degree + 1], tail: 0.0 }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Ball {
        self.coeffs.get(k).copied().unwrap_or_else(|| Ball::exact(0.0))
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    fn bump_tail(&mut self, extra: f64) {
        self.tail = (self.tail + extra) * (1.0 + 4.0 * f64::EPSILON);
    }

    /// Enclosure of the weighted l1 norm, tail included.
    pub fn norm(&self) -> Result<Ball> {
        let mut sum = Ball::exact(0.0);
        let mut p = Ball::exact(1.0);
        let rho = Ball::exact(self.rho);
        for c in &self.coeffs {
            sum = sum.add(&c.abs().mul(&p)?)?;
            p = p.mul(&rho)?;
        }
        sum.add(&Ball::new(0.5 * self.tail, 0.5 * self.tail)?)
    }

    pub fn add(&self, other: &BallSeries) -> Result<BallSeries> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k).add(&other.coeff(k))?);
        }
        let mut out = BallSeries { rho: self.rho, coeffs, tail: self.tail };
        out.bump_tail(other.tail);
        Ok(out)
    }

    pub fn sub(&self, other: &BallSeries) -> Result<BallSeries> {
        self.add(&other.scale(&Ball::exact(-1.0))?)
    }

    pub fn scale(&self, c: &Ball) -> Result<BallSeries> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|x| x.mul(c))
            .collect::<Result<Vec<_>>>()?;
        let mut out = BallSeries { rho: self.rho, coeffs, tail: 0.0 };
        out.bump_tail(self.tail * c.abs_upper());
        Ok(out)
    }

    pub fn mul(&self, other: &BallSeries) -> Result<BallSeries> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let full = self.coeffs.len() + other.coeffs.len() - 1;
        let mut prod = vec![Ball::exact(0.0); full];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                prod[i + j] = prod[i + j].add(&a.mul(b)?)?;
            }
        }
        let mut tail = self.norm()?.abs_upper() * other.tail
            + other.norm()?.abs_upper() * self.tail;
        let mut p = self.rho.powi(n as i32);
        for c in &prod[n..] {
            tail += c.abs_upper() * p;
            p *= self.rho;
        }
        prod.truncate(n);
        let mut out = BallSeries { rho: self.rho, coeffs: prod, tail: 0.0 };
        out.bump_tail(tail);
        Ok(out)
    }

    pub fn restrict(&self, rho_new: f64) -> Result<BallSeries> {
        if rho_new > self.rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                op: "ball restrict",
                detail: format!("rho {} exceeds stored radius {}", rho_new, self.rho),
            });
        }
        Ok(BallSeries { rho: rho_new, coeffs: self.coeffs.clone(), tail: self.tail })
    }

    pub fn affine(&self, a: &Ball, b: &Ball, rho_out: f64) -> Result<BallSeries> {
        let reach = a.abs_upper() * rho_out + b.abs_upper();
        if reach > self.rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                op: "ball affine substitution",
                detail: format!(
                    "|a| rho_out + |b| = {:.6} exceeds input radius {:.6}",
                    reach, self.rho
                ),
            });
        }
        let n = self.coeffs.len();
        let mut out = vec![Ball::exact(0.0); n];
        out[0] = self.coeffs[n - 1];
        for fk in self.coeffs[..n - 1].iter().rev() {
            for i in (1..n).rev() {
                out[i] = out[i].mul(b)?.add(&out[i - 1].mul(a)?)?;
            }
            out[0] = out[0].mul(b)?.add(fk)?;
        }
        let mut res = BallSeries { rho: rho_out, coeffs: out, tail: 0.0 };
        res.bump_tail(self.tail);
        Ok(res)
    }

    /// Enclosure of the value at an enclosed point `|x| <= rho`; the series
    /// remainder contributes `[-tail, tail]`.
    pub fn eval(&self, x: &Ball) -> Result<Ball> {
        if x.abs_upper() > self.rho * (1.0 + DOMAIN_SLACK) {
            return Err(Error::OutsideDisk { x: x.center(), rho: self.rho });
        }
        let mut acc = Ball::exact(0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        acc.add(&Ball::new(0.0, self.tail)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rho: f64, coeffs: &[f64]) -> Series {
        Series::new(rho, coeffs.to_vec()).unwrap()
    }

    #[test]
    fn norm_examples() {
        // constant 1 on rho=2
        assert_eq!(series(2.0, &[1.0]).norm(), 1.0);
        // f = x on rho=3
        assert_eq!(series(3.0, &[0.0, 1.0]).norm(), 3.0);
        // coefficients (1,1,1) on rho=2: 1 + 2 + 4
        assert_eq!(series(2.0, &[1.0, 1.0, 1.0]).norm(), 7.0);
    }

    #[test]
    fn mul_identity_and_exact_polynomials() {
        let f = series(2.0, &[3.0, -1.0, 0.5, 0.0]);
        let one = Series::constant(2.0, 1.0, 3);
        let p = f.mul(&one).unwrap();
        assert_eq!(p.coeffs(), f.coeffs());
        assert_eq!(p.tail(), 0.0);

        // (1+x)(1-x) = 1 - x^2
        let a = series(1.5, &[1.0, 1.0, 0.0]);
        let b = series(1.5, &[1.0, -1.0, 0.0]);
        let c = a.mul(&b).unwrap();
        assert_eq!(c.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn mul_matches_double_loop_convolution() {
        // brute-force convolution oracle on random degree-6 inputs
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..50 {
            let f: Vec<f64> = (0..7).map(|_| rnd()).collect();
            let g: Vec<f64> = (0..7).map(|_| rnd()).collect();
            let mut expect = vec![0.0_f64; 13];
            for i in 0..7 {
                for j in 0..7 {
                    expect[i + j] += f[i] * g[j];
                }
            }
            let mut fs = Series::zero(2.0, 12);
            fs.coeffs_mut()[..7].copy_from_slice(&f);
            let mut gs = Series::zero(2.0, 12);
            gs.coeffs_mut()[..7].copy_from_slice(&g);
            let p = fs.mul(&gs).unwrap();
            for k in 0..13 {
                assert!((p.coeff(k) - expect[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mul_submultiplicative_and_tail_folding() {
        let f = series(2.0, &[1.0, 1.0]);
        let g = series(2.0, &[0.0, 1.0]);
        // f*g = x + x^2, but truncation degree is 1: x^2 folds into tail = 4
        let p = f.mul(&g).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 1.0]);
        assert_eq!(p.tail(), 4.0);
        assert!(p.norm() <= f.norm() * g.norm() + 1e-12);
    }

    #[test]
    fn affine_identity_and_exact_shift() {
        let f = series(3.0, &[1.0, 2.0, -1.0, 0.25]);
        let g = f.affine(1.0, 0.0, 3.0).unwrap();
        assert_eq!(g.coeffs(), f.coeffs());

        // f = x^2, a=2, b=1 -> 1 + 4x + 4x^2
        let f = series(10.0, &[0.0, 0.0, 1.0]);
        let g = f.affine(2.0, 1.0, 3.0).unwrap();
        assert_eq!(g.coeffs(), &[1.0, 4.0, 4.0]);
    }

    #[test]
    fn affine_pointwise_oracle() {
        let f = series(4.0, &[0.3, -1.2, 0.07, 0.9, -0.33, 0.01]);
        let (a, b) = (0.6, 0.8);
        let g = f.affine(a, b, 2.0).unwrap();
        for i in 0..=20 {
            let x = -2.0 + 0.2 * i as f64;
            let lhs = g.eval(x).unwrap();
            let rhs = f.eval(a * x + b).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * f.norm(), "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn affine_chain_rule() {
        let f = series(5.0, &[0.1, 0.4, -0.2, 0.05, 0.3]);
        let (a, b) = (0.7, 0.5);
        let (c, d) = (1.1, -0.4);
        let lhs = f.affine(a, b, 2.5).unwrap().affine(c, d, 1.5).unwrap();
        let rhs = f.affine(a * c, a * d + b, 1.5).unwrap();
        let diff = lhs.sub(&rhs).unwrap().norm();
        assert!(diff < 1e-12 * f.norm().max(1.0), "chain rule residual {diff}");
    }

    #[test]
    fn affine_domain_violation_detected() {
        let f = series(1.0, &[1.0, 1.0]);
        assert!(f.affine(1.0, 0.5, 1.0).is_err());
        assert!(f.affine(0.5, 0.5, 1.0).is_ok());
    }

    #[test]
    fn eval_examples() {
        let f = series(2.0, &[1.0, 1.0]);
        assert_eq!(f.eval(1.0).unwrap(), 2.0);
        assert!(f.eval(3.0).is_err());
    }

    #[test]
    fn parity_projection() {
        // x + x^2 on rho: even projection keeps x^2, discards mass rho
        let rho = 1.75;
        let f = series(rho, &[0.0, 1.0, 1.0]);
        let (even, mass) = f.project_parity(Parity::Even);
        assert_eq!(even.coeffs(), &[0.0, 0.0, 1.0]);
        assert!((mass - rho).abs() < 1e-15);

        // idempotent
        let (twice, mass2) = even.project_parity(Parity::Even);
        assert_eq!(twice.coeffs(), even.coeffs());
        assert_eq!(mass2, 0.0);
    }

    #[test]
    fn checked_projection_rejects_lossy_input() {
        let f = series(1.0, &[0.0, 1.0, 1.0]);
        assert!(f.project_parity_checked(Parity::Even).is_err());
        let g = series(1.0, &[0.0, 1e-14, 1.0]);
        assert!(g.project_parity_checked(Parity::Even).is_ok());
    }

    #[test]
    fn ball_eval_contains_plain_value() {
        let f = series(2.0, &[0.2, -0.7, 0.31, 0.05]);
        let bf = BallSeries::from_plain(&f);
        for i in 0..=10 {
            let x = -1.9 + 0.38 * i as f64;
            let plain = f.eval(x).unwrap();
            let ball = bf.eval(&Ball::inexact(x)).unwrap();
            assert!(ball.contains(plain));
        }
    }

    #[test]
    fn ball_norm_contains_plain_norm() {
        let f = Series::with_tail(2.0, vec![0.3, 0.11, -0.9], 1e-3).unwrap();
        let bf = BallSeries::from_plain(&f);
        assert!(bf.norm().unwrap().contains(f.norm()));
    }
}
