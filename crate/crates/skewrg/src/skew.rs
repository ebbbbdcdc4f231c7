//! Matrix-valued analytic functions and skew-product maps.
//!
//! A skew-product `(alpha, A)` maps `(x, y) -> (x + alpha, A(x) y)`. The
//! matrix part is stored in the translated representation
//! `A0(x) = A(x - alpha/2)` and in the rotated basis where the reversal
//! involution is `S = diag(1, -1)`:
//!
//! ```text
//! A0 = [ t + s   u ]
//!      [   v   t - s ]
//! ```
//!
//! With these conventions a map is reversible exactly when `t, u, v` are
//! even functions and `s` is odd, and the scaling conjugation by
//! `L = S e^{sigma S}` acts diagonally on the components.
//!
//! Inverses use the adjugate (PSL convention): no division by the
//! determinant happens mid-pipeline; unit determinants are restored only
//! through the explicit normalization map `A -> det(A)^{-1/2} A`.

use crate::ball::Ball;
use crate::series::{BallSeries, Parity, Series};
use crate::{Error, Result, ALPHA_STAR};
use num_complex::Complex64;

/// Rotation numbers arising here are integer combinations `p + q alpha*`;
/// keeping the integers exact makes the golden-mean bookkeeping
/// (`alpha*^2 = 1 - alpha*`) free of rounding.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Rotation {
    whole: i64,
    golden: i64,
}

impl Rotation {
    pub const ZERO: Rotation = Rotation { whole: 0, golden: 0 };
    pub const ONE: Rotation = Rotation { whole: 1, golden: 0 };
    pub const ALPHA: Rotation = Rotation { whole: 0, golden: 1 };

    pub fn new(whole: i64, golden: i64) -> Self {
        Rotation { whole, golden }
    }

    pub fn value(&self) -> f64 {
        self.whole as f64 + self.golden as f64 * ALPHA_STAR
    }

    /// Enclosure of the rotation value (alpha* itself is irrational).
    pub fn ball(&self) -> Result<Ball> {
        Ball::exact(self.whole as f64)
            .add(&Ball::inexact(ALPHA_STAR).mul(&Ball::exact(self.golden as f64))?)
    }

    pub fn add(&self, other: &Rotation) -> Rotation {
        Rotation { whole: self.whole + other.whole, golden: self.golden + other.golden }
    }

    pub fn neg(&self) -> Rotation {
        Rotation { whole: -self.whole, golden: -self.golden }
    }

    /// Multiply by `alpha*`: uses `(p + q a) a = q + (p - q) a`.
    pub fn mul_alpha(&self) -> Rotation {
        Rotation { whole: self.golden, golden: self.whole - self.golden }
    }

    /// Divide by `alpha*`: multiply by `1/alpha* = 1 + alpha*`.
    pub fn div_alpha(&self) -> Rotation {
        Rotation { whole: self.whole + self.golden, golden: self.whole }
    }

    pub fn div_alpha_pow(&self, k: u32) -> Rotation {
        let mut r = *self;
        for _ in 0..k {
            r = r.div_alpha();
        }
        r
    }
}

/// Plain 2x2 real matrix, used for pointwise evaluation and transfer
/// products.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Mat2 {
    pub e: [[f64; 2]; 2],
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { e: [[a11, a12], [a21, a22]] }
    }

    pub fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.e;
        let b = &o.e;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn apply(&self, y: [f64; 2]) -> [f64; 2] {
        [
            self.e[0][0] * y[0] + self.e[0][1] * y[1],
            self.e[1][0] * y[0] + self.e[1][1] * y[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.e[0][0] + self.e[1][1]
    }

    pub fn scale(&self, c: f64) -> Mat2 {
        Mat2::new(c * self.e[0][0], c * self.e[0][1], c * self.e[1][0], c * self.e[1][1])
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] - o.e[0][0],
            self.e[0][1] - o.e[0][1],
            self.e[1][0] - o.e[1][0],
            self.e[1][1] - o.e[1][1],
        )
    }

    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.e[1][1], -self.e[0][1], -self.e[1][0], self.e[0][0])
    }

    pub fn max_abs(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// Eigenvalues of a real 2x2 matrix, by the quadratic formula.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let tr = self.trace();
        let disc = Complex64::new(tr * tr - 4.0 * self.det(), 0.0).sqrt();
        let half = Complex64::new(0.5 * tr, 0.0);
        (half + disc * 0.5, half - disc * 0.5)
    }
}

/// The basis change `M = (1/sqrt 2) [[1, 1], [1, -1]]` (own inverse) that
/// diagonalizes the reversal involution.
pub fn basis_m() -> Mat2 {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(c, c, c, -c)
}

/// 2x2 matrix-valued analytic function in translated coordinates, stored
/// through the four component series `t, u, v, s` on a shared disk.
#[derive(Clone, Debug)]
pub struct MatrixFn {
    pub t: Series,
    pub u: Series,
    pub v: Series,
    pub s: Series,
}

impl MatrixFn {
    pub fn new(t: Series, u: Series, v: Series, s: Series) -> Result<Self> {
        let rho = t.rho();
        for comp in [&u, &v, &s] {
            if (comp.rho() - rho).abs() > 1e-12 * rho {
                return Err(Error::RadiusMismatch(rho, comp.rho()));
            }
            if comp.degree() != t.degree() {
                return Err(Error::Other(format!(
                    "component degrees differ: {} vs {}",
                    t.degree(),
                    comp.degree()
                )));
            }
        }
        Ok(MatrixFn { t, u, v, s })
    }

    pub fn identity(rho: f64, degree: usize) -> Self {
        MatrixFn {
            t: Series::constant(rho, 1.0, degree),
            u: Series::zero(rho, degree),
            v: Series::zero(rho, degree),
            s: Series::zero(rho, degree),
        }
    }

    pub fn rho(&self) -> f64 {
        self.t.rho()
    }

    pub fn degree(&self) -> usize {
        self.t.degree()
    }

    pub fn components(&self) -> [&Series; 4] {
        [&self.t, &self.u, &self.v, &self.s]
    }

    /// Sum of the four component norms.
    pub fn norm(&self) -> f64 {
        self.t.norm() + self.u.norm() + self.v.norm() + self.s.norm()
    }

    pub fn add(&self, o: &MatrixFn) -> Result<MatrixFn> {
        Ok(MatrixFn {
            t: self.t.add(&o.t)?,
            u: self.u.add(&o.u)?,
            v: self.v.add(&o.v)?,
            s: self.s.add(&o.s)?,
        })
    }

    pub fn sub(&self, o: &MatrixFn) -> Result<MatrixFn> {
        Ok(MatrixFn {
            t: self.t.sub(&o.t)?,
            u: self.u.sub(&o.u)?,
            v: self.v.sub(&o.v)?,
            s: self.s.sub(&o.s)?,
        })
    }

    pub fn scale(&self, c: f64) -> MatrixFn {
        MatrixFn {
            t: self.t.scale(c),
            u: self.u.scale(c),
            v: self.v.scale(c),
            s: self.s.scale(c),
        }
    }

    /// Drop the tail diagnostics of all components (plain-mode pipelines
    /// reset them per step; compounding the conservative bounds through an
    /// iteration is the ball path's job).
    pub fn strip_tails(&self) -> MatrixFn {
        MatrixFn {
            t: self.t.strip_tail(),
            u: self.u.strip_tail(),
            v: self.v.strip_tail(),
            s: self.s.strip_tail(),
        }
    }

    /// Sum of the component tail diagnostics.
    pub fn tail_mass(&self) -> f64 {
        self.t.tail() + self.u.tail() + self.v.tail() + self.s.tail()
    }

    /// Multiply on the right by a constant diagonal matrix `diag(l1, l2)`.
    pub fn mul_diag_right(&self, l1: f64, l2: f64) -> MatrixFn {
        let hp = 0.5 * (l1 + l2);
        let hm = 0.5 * (l1 - l2);
        // [[t+s, u], [v, t-s]] diag(l1, l2) in (t, u, v, s) components
        let t = self.t.scale(hp).add(&self.s.scale(hm)).expect("same rho");
        let s = self.t.scale(hm).add(&self.s.scale(hp)).expect("same rho");
        MatrixFn { t, u: self.u.scale(l2), v: self.v.scale(l1), s }
    }

    /// Multiply by a scalar function.
    pub fn mul_series(&self, f: &Series) -> Result<MatrixFn> {
        Ok(MatrixFn {
            t: self.t.mul(f)?,
            u: self.u.mul(f)?,
            v: self.v.mul(f)?,
            s: self.s.mul(f)?,
        })
    }

    /// Pointwise matrix product `self * other` in component form.
    pub fn mat_mul(&self, o: &MatrixFn) -> Result<MatrixFn> {
        let p1 = self.t.add(&self.s)?; // t1 + s1
        let m1 = self.t.sub(&self.s)?; // t1 - s1
        let p2 = o.t.add(&o.s)?;
        let m2 = o.t.sub(&o.s)?;
        let c11 = p1.mul(&p2)?.add(&self.u.mul(&o.v)?)?;
        let c12 = p1.mul(&o.u)?.add(&self.u.mul(&m2)?)?;
        let c21 = self.v.mul(&p2)?.add(&m1.mul(&o.v)?)?;
        let c22 = self.v.mul(&o.u)?.add(&m1.mul(&m2)?)?;
        MatrixFn::new(
            c11.add(&c22)?.scale(0.5),
            c12,
            c21,
            c11.sub(&c22)?.scale(0.5),
        )
    }

    /// Adjugate: `(t, u, v, s) -> (t, -u, -v, -s)`. For unit determinants
    /// this is the inverse; in general it represents the inverse of the
    /// associated Moebius transformation.
    pub fn adjugate(&self) -> MatrixFn {
        MatrixFn {
            t: self.t.clone(),
            u: self.u.scale(-1.0),
            v: self.v.scale(-1.0),
            s: self.s.scale(-1.0),
        }
    }

    pub fn affine(&self, a: f64, b: f64, rho_out: f64) -> Result<MatrixFn> {
        Ok(MatrixFn {
            t: self.t.affine(a, b, rho_out)?,
            u: self.u.affine(a, b, rho_out)?,
            v: self.v.affine(a, b, rho_out)?,
            s: self.s.affine(a, b, rho_out)?,
        })
    }

    pub fn restrict(&self, rho_new: f64) -> Result<MatrixFn> {
        Ok(MatrixFn {
            t: self.t.restrict(rho_new)?,
            u: self.u.restrict(rho_new)?,
            v: self.v.restrict(rho_new)?,
            s: self.s.restrict(rho_new)?,
        })
    }

    pub fn eval(&self, x: f64) -> Result<Mat2> {
        let t = self.t.eval(x)?;
        let u = self.u.eval(x)?;
        let v = self.v.eval(x)?;
        let s = self.s.eval(x)?;
        Ok(Mat2::new(t + s, u, v, t - s))
    }

    /// Determinant `t^2 - s^2 - u v` as a series.
    pub fn det_series(&self) -> Result<Series> {
        self.t
            .mul(&self.t)?
            .sub(&self.s.mul(&self.s)?)?
            .sub(&self.u.mul(&self.v)?)
    }

    /// l1 distance of the determinant from the constant 1.
    pub fn det_drift(&self) -> Result<f64> {
        let d = self.det_series()?;
        let one = Series::constant(d.rho(), 1.0, d.degree());
        Ok(d.sub(&one)?.norm())
    }

    /// Mass on coefficients violating reversible parity
    /// (t, u, v even; s odd).
    pub fn parity_residual(&self) -> f64 {
        self.t.parity_residual(Parity::Even)
            + self.u.parity_residual(Parity::Even)
            + self.v.parity_residual(Parity::Even)
            + self.s.parity_residual(Parity::Odd)
    }

    pub fn project_reversible(&self) -> (MatrixFn, f64) {
        let (t, mt) = self.t.project_parity(Parity::Even);
        let (u, mu) = self.u.project_parity(Parity::Even);
        let (v, mv) = self.v.project_parity(Parity::Even);
        let (s, ms) = self.s.project_parity(Parity::Odd);
        (MatrixFn { t, u, v, s }, mt + mu + mv + ms)
    }

    /// The scaling conjugation: with `L = S e^{sigma S}`, the map
    /// `C0 -> L^{-1} C0(c x) L` acts on components as
    /// `(t, u, v, s)(x) -> (t, -e^{-2 sigma} u, -e^{2 sigma} v, s)(c x)`.
    pub fn scale_conjugate(&self, c: f64, sigma: f64, rho_out: f64) -> Result<MatrixFn> {
        let eu = -(-2.0 * sigma).exp();
        let ev = -(2.0 * sigma).exp();
        if !eu.is_finite() || !ev.is_finite() {
            return Err(Error::NonFinite("scale_conjugate"));
        }
        Ok(MatrixFn {
            t: self.t.affine(c, 0.0, rho_out)?,
            u: self.u.affine(c, 0.0, rho_out)?.scale(eu),
            v: self.v.affine(c, 0.0, rho_out)?.scale(ev),
            s: self.s.affine(c, 0.0, rho_out)?,
        })
    }

    /// Inverse square root of the determinant, by Newton iteration
    /// `y <- y (3 - d y^2) / 2` on series. Requires the relative deviation
    /// `|| det / det(0) - 1 || < 1`, which keeps the determinant away from
    /// zero on the disk and fixes the square-root branch.
    pub(crate) fn det_inv_sqrt(&self) -> Result<Series> {
        let d_full = self.det_series()?;
        let d0 = d_full.coeff(0);
        if !(d0 > 0.0) {
            return Err(Error::NormalizeDomain(f64::INFINITY));
        }
        let one = Series::constant(d_full.rho(), 1.0, d_full.degree());
        let drift = d_full.scale(1.0 / d0).sub(&one)?.norm();
        if !(drift < 1.0) {
            return Err(Error::NormalizeDomain(drift));
        }
        // iterate on the polynomial content; threading the diagnostic tail
        // through a fixed-point loop would only compound it
        let d = d_full.strip_tail();
        let mut y = Series::constant(d.rho(), 1.0 / d0.sqrt(), d.degree());
        for _ in 0..60 {
            let dy2 = d.mul(&y.mul(&y)?.strip_tail())?.strip_tail();
            let three = Series::constant(d.rho(), 3.0, d.degree());
            let next = y.mul(&three.sub(&dy2)?)?.strip_tail().scale(0.5);
            let step = next.sub(&y)?.norm();
            y = next;
            if step <= 1e-15 * y.norm() {
                break;
            }
        }
        // first-order sensitivity of d^{-1/2} to the determinant tail
        let ynorm = y.norm();
        Ok(y.with_extra_tail(0.5 * ynorm * ynorm * ynorm * d_full.tail()))
    }

    /// Normalization `A -> det(A)^{-1/2} A`; the result has determinant 1
    /// and stays reversible (the determinant of a reversible matrix
    /// function is even).
    pub fn normalize(&self) -> Result<MatrixFn> {
        let r = self.det_inv_sqrt()?;
        self.mul_series(&r)
    }

    /// Directional derivative of the normalization at `self` along `dot`:
    /// `d^{-1/2} dot - (1/2) d^{-3/2} ddet A` with
    /// `ddet = 2 t tdot - 2 s sdot - u vdot - v udot`.
    pub fn dnormalize(&self, dot: &MatrixFn) -> Result<MatrixFn> {
        let r = self.det_inv_sqrt()?;
        self.dnormalize_with(&r, dot)
    }

    /// Same as [`dnormalize`](Self::dnormalize) with the factor
    /// `r = det^{-1/2}` supplied by the caller (it only depends on the
    /// base point, so derivative assemblies reuse it across directions).
    pub fn dnormalize_with(&self, r: &Series, dot: &MatrixFn) -> Result<MatrixFn> {
        let ddet = self
            .t
            .mul(&dot.t)?
            .sub(&self.s.mul(&dot.s)?)?
            .scale(2.0)
            .sub(&self.u.mul(&dot.v)?)?
            .sub(&self.v.mul(&dot.u)?)?;
        let r3 = r.mul(r)?.mul(r)?;
        let correction = self.mul_series(&ddet.mul(&r3)?)?.scale(-0.5);
        dot.mul_series(r)?.add(&correction)
    }
}

/// Scaling map `Lambda(x, y) = (c x, S e^{sigma S} y)` with contraction
/// `c = alpha*^k`.
#[derive(Copy, Clone, Debug)]
pub struct ScalingLambda {
    c: f64,
    alpha_pow: u32,
    sigma: f64,
}

impl ScalingLambda {
    /// Contraction by the `k`-th power of the golden mean.
    pub fn golden(alpha_pow: u32, sigma: f64) -> Self {
        assert!(alpha_pow >= 1);
        ScalingLambda { c: ALPHA_STAR.powi(alpha_pow as i32), alpha_pow, sigma }
    }

    pub fn contraction(&self) -> f64 {
        self.c
    }

    pub fn alpha_pow(&self) -> u32 {
        self.alpha_pow
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Matrix part `S e^{sigma S} = diag(e^sigma, -e^{-sigma})`.
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.sigma.exp(), 0.0, 0.0, -(-self.sigma).exp())
    }
}

/// Skew-product map `(alpha, A)` over a circle translation, holding the
/// translated matrix `A0(x) = A(x - alpha/2)`.
#[derive(Clone, Debug)]
pub struct SkewMap {
    rot: Rotation,
    matrix: MatrixFn,
}

impl SkewMap {
    pub fn new(rot: Rotation, matrix: MatrixFn) -> Self {
        SkewMap { rot, matrix }
    }

    pub fn rotation(&self) -> Rotation {
        self.rot
    }

    pub fn matrix(&self) -> &MatrixFn {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut MatrixFn {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> MatrixFn {
        self.matrix
    }

    pub fn rho(&self) -> f64 {
        self.matrix.rho()
    }

    /// Untranslated matrix value `A(x) = A0(x + alpha/2)`.
    pub fn eval_untranslated(&self, x: f64) -> Result<Mat2> {
        self.matrix.eval(x + 0.5 * self.rot.value())
    }

    /// Composition `self . inner` (inner acts first):
    /// rotation `alpha + beta`, matrix `C0(x) = B0(x + alpha/2) A0(x - beta/2)`
    /// with `(beta, B) = self` and `(alpha, A) = inner`.
    pub fn compose(&self, inner: &SkewMap, rho_out: f64) -> Result<SkewMap> {
        let alpha = inner.rot.value();
        let beta = self.rot.value();
        let b_shift = self.matrix.affine(1.0, 0.5 * alpha, rho_out)?;
        let a_shift = inner.matrix.affine(1.0, -0.5 * beta, rho_out)?;
        Ok(SkewMap {
            rot: self.rot.add(&inner.rot),
            matrix: b_shift.mat_mul(&a_shift)?,
        })
    }

    /// Projective inverse: rotation negated, matrix replaced by its
    /// adjugate. Callers needing unit determinant normalize afterwards.
    pub fn inverse(&self) -> SkewMap {
        SkewMap { rot: self.rot.neg(), matrix: self.matrix.adjugate() }
    }

    /// Conjugation by a scaling: rotation divided by the contraction,
    /// matrix `L^{-1} C0(c x) L`.
    pub fn scale(&self, lam: &ScalingLambda, rho_out: f64) -> Result<SkewMap> {
        Ok(SkewMap {
            rot: self.rot.div_alpha_pow(lam.alpha_pow()),
            matrix: self
                .matrix
                .scale_conjugate(lam.contraction(), lam.sigma(), rho_out)?,
        })
    }

    /// The unique sigma that equalizes the off-diagonal values at the
    /// origin: `sigma = (1/4) log |u0(0) / v0(0)|`.
    pub fn equalize_sigma(&self) -> Result<f64> {
        let u0 = self.matrix.u.coeff(0);
        let v0 = self.matrix.v.coeff(0);
        if u0 == 0.0 || !u0.is_finite() {
            return Err(Error::EqualizeUndefined(u0));
        }
        if v0 == 0.0 || !v0.is_finite() {
            return Err(Error::EqualizeUndefined(v0));
        }
        Ok(0.25 * (u0 / v0).abs().ln())
    }

    /// Divide the matrix by the square root of its determinant.
    pub fn normalize(&self) -> Result<SkewMap> {
        Ok(SkewMap { rot: self.rot, matrix: self.matrix.normalize()? })
    }

    pub fn parity_residual(&self) -> f64 {
        self.matrix.parity_residual()
    }
}

/// The palindromic product `g . f . g` (with `f` in the middle):
/// `W0(x) = Cg0(x + delta) Cf0(x) Cg0(x - delta)` with
/// `delta = (rot_f + rot_g) / 2`, rotation `rot_f + 2 rot_g`.
/// Maps reversible operands to a reversible result.
pub fn gfg(f: &SkewMap, g: &SkewMap, rho_out: f64) -> Result<SkewMap> {
    let delta = 0.5 * (f.rot.value() + g.rot.value());
    let left = g.matrix.affine(1.0, delta, rho_out)?;
    let mid = f.matrix.restrict(rho_out.min(f.matrix.rho()))?;
    if rho_out > f.matrix.rho() * (1.0 + 1e-9) {
        return Err(Error::Domain {
            op: "gfg",
            detail: format!(
                "middle factor radius {} smaller than requested {}",
                f.matrix.rho(),
                rho_out
            ),
        });
    }
    let right = g.matrix.affine(1.0, -delta, rho_out)?;
    let rot = f.rot.add(&g.rot).add(&g.rot);
    Ok(SkewMap { rot, matrix: left.mat_mul(&mid)?.mat_mul(&right)? })
}

/// Ball-arithmetic counterpart of [`MatrixFn`], carrying enclosures through
/// the same component operations. Only the operations needed to evaluate
/// one renormalization step with containment are provided.
#[derive(Clone, Debug)]
pub struct BallMatrixFn {
    pub t: BallSeries,
    pub u: BallSeries,
    pub v: BallSeries,
    pub s: BallSeries,
}

impl BallMatrixFn {
    pub fn from_plain(m: &MatrixFn) -> Self {
        BallMatrixFn {
            t: BallSeries::from_plain(&m.t),
            u: BallSeries::from_plain(&m.u),
            v: BallSeries::from_plain(&m.v),
            s: BallSeries::from_plain(&m.s),
        }
    }

    pub fn norm(&self) -> Result<Ball> {
        self.t
            .norm()?
            .add(&self.u.norm()?)?
            .add(&self.v.norm()?)?
            .add(&self.s.norm()?)
    }

    pub fn sub(&self, o: &BallMatrixFn) -> Result<BallMatrixFn> {
        Ok(BallMatrixFn {
            t: self.t.sub(&o.t)?,
            u: self.u.sub(&o.u)?,
            v: self.v.sub(&o.v)?,
            s: self.s.sub(&o.s)?,
        })
    }

    pub fn adjugate(&self) -> Result<BallMatrixFn> {
        let neg = Ball::exact(-1.0);
        Ok(BallMatrixFn {
            t: self.t.clone(),
            u: self.u.scale(&neg)?,
            v: self.v.scale(&neg)?,
            s: self.s.scale(&neg)?,
        })
    }

    pub fn affine(&self, a: &Ball, b: &Ball, rho_out: f64) -> Result<BallMatrixFn> {
        Ok(BallMatrixFn {
            t: self.t.affine(a, b, rho_out)?,
            u: self.u.affine(a, b, rho_out)?,
            v: self.v.affine(a, b, rho_out)?,
            s: self.s.affine(a, b, rho_out)?,
        })
    }

    pub fn restrict(&self, rho_new: f64) -> Result<BallMatrixFn> {
        Ok(BallMatrixFn {
            t: self.t.restrict(rho_new)?,
            u: self.u.restrict(rho_new)?,
            v: self.v.restrict(rho_new)?,
            s: self.s.restrict(rho_new)?,
        })
    }

    pub fn mat_mul(&self, o: &BallMatrixFn) -> Result<BallMatrixFn> {
        let p1 = self.t.add(&self.s)?;
        let m1 = self.t.sub(&self.s)?;
        let p2 = o.t.add(&o.s)?;
        let m2 = o.t.sub(&o.s)?;
        let c11 = p1.mul(&p2)?.add(&self.u.mul(&o.v)?)?;
        let c12 = p1.mul(&o.u)?.add(&self.u.mul(&m2)?)?;
        let c21 = self.v.mul(&p2)?.add(&m1.mul(&o.v)?)?;
        let c22 = self.v.mul(&o.u)?.add(&m1.mul(&m2)?)?;
        let half = Ball::exact(0.5);
        Ok(BallMatrixFn {
            t: c11.add(&c22)?.scale(&half)?,
            u: c12,
            v: c21,
            s: c11.sub(&c22)?.scale(&half)?,
        })
    }

    pub fn scale_conjugate(&self, c: &Ball, sigma: &Ball, rho_out: f64) -> Result<BallMatrixFn> {
        let zero = Ball::exact(0.0);
        let two = Ball::exact(2.0);
        let eu = sigma.mul(&two)?.neg().exp()?.neg();
        let ev = sigma.mul(&two)?.exp()?.neg();
        Ok(BallMatrixFn {
            t: self.t.affine(c, &zero, rho_out)?,
            u: self.u.affine(c, &zero, rho_out)?.scale(&eu)?,
            v: self.v.affine(c, &zero, rho_out)?.scale(&ev)?,
            s: self.s.affine(c, &zero, rho_out)?,
        })
    }

    pub fn det(&self) -> Result<BallSeries> {
        self.t
            .mul(&self.t)?
            .sub(&self.s.mul(&self.s)?)?
            .sub(&self.u.mul(&self.v)?)
    }

    pub fn equalize_sigma(&self) -> Result<Ball> {
        let u0 = self.u.coeff(0).abs();
        let v0 = self.v.coeff(0).abs();
        u0.div(&v0)?.ln()?.mul(&Ball::exact(0.25))
    }

    /// Validated normalization: an approximate inverse square root `y` of
    /// the determinant is computed in plain arithmetic, and the defect
    /// `eta = || y^2 det - 1 ||` bounds the remaining correction factor by
    /// `(1 - eta)^{-1/2} - 1`, which is folded into the component tails.
    pub fn normalize(&self, plain: &MatrixFn) -> Result<BallMatrixFn> {
        let y = BallSeries::from_plain(&plain.det_inv_sqrt()?);
        let d = self.det()?;
        let w = y.mul(&y)?.mul(&d)?;
        let one_b = {
            let mut o = BallSeries::zero(w.rho(), w.degree());
            o = o.add(&BallSeries::from_plain(&Series::constant(w.rho(), 1.0, w.degree())))?;
            o
        };
        let eta = w.sub(&one_b)?.norm()?.abs_upper();
        if !(eta < 1.0) {
            return Err(Error::NormalizeDomain(eta));
        }
        // correction enclosure: multiply by an unknown function g with
        // ||g - 1|| <= (1 - eta)^{-1/2} - 1
        let delta = (1.0 - eta).powf(-0.5) - 1.0;
        let correction = Ball::new(1.0, delta * (1.0 + 1e-13) + f64::EPSILON)?;
        Ok(BallMatrixFn {
            t: self.t.mul(&y)?.scale(&correction)?,
            u: self.u.mul(&y)?.scale(&correction)?,
            v: self.v.mul(&y)?.scale(&correction)?,
            s: self.s.mul(&y)?.scale(&correction)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Series;

    fn sample_matrix(rho: f64, degree: usize, seed: u64) -> MatrixFn {
        let mut state = seed;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut comp = |parity: usize| {
            let mut s = Series::zero(rho, degree);
            for k in 0..=degree.min(6) {
                if k % 2 == parity {
                    // decay keeps norms tame on the test disks
                    s.coeffs_mut()[k] = rnd() * 0.3 * 0.25_f64.powi(k as i32);
                }
            }
            s
        };
        MatrixFn {
            t: comp(0),
            u: comp(0),
            v: comp(0),
            s: comp(1),
        }
    }

    #[test]
    fn rotation_golden_arithmetic() {
        let a = Rotation::ALPHA;
        // alpha^2 = 1 - alpha
        let a2 = a.mul_alpha();
        assert_eq!(a2, Rotation::new(1, -1));
        // alpha^3 = 2 alpha - 1
        let a3 = a2.mul_alpha();
        assert_eq!(a3, Rotation::new(-1, 2));
        // (2 alpha - 1) / alpha^3 = 1
        assert_eq!(a3.div_alpha_pow(3), Rotation::ONE);
        // alpha^4 / alpha^3 = alpha
        assert_eq!(a3.mul_alpha().div_alpha_pow(3), Rotation::ALPHA);
        assert!((a3.value() - (2.0 * ALPHA_STAR - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn mat_mul_matches_pointwise_product() {
        let a = sample_matrix(2.0, 12, 7);
        let b = sample_matrix(2.0, 12, 99);
        let c = a.mat_mul(&b).unwrap();
        for i in 0..=20 {
            let x = -1.8 + 0.18 * i as f64;
            let lhs = c.eval(x).unwrap();
            let rhs = a.eval(x).unwrap().mul(&b.eval(x).unwrap());
            assert!(lhs.sub(&rhs).max_abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn adjugate_identity() {
        // A * adj(A) = det(A) * I, sampled
        let a = sample_matrix(2.0, 16, 3);
        let prod = a.mat_mul(&a.adjugate()).unwrap();
        let det = a.det_series().unwrap();
        for i in 0..=20 {
            let x = -1.9 + 0.19 * i as f64;
            let p = prod.eval(x).unwrap();
            let d = det.eval(x).unwrap();
            let expect = Mat2::new(d, 0.0, 0.0, d);
            assert!(p.sub(&expect).max_abs() < 1e-12);
        }
        // identity matrix maps to itself
        let id = MatrixFn::identity(2.0, 8);
        let adj = id.adjugate();
        assert!(adj.sub(&id).unwrap().norm() < 1e-15);
    }

    #[test]
    fn adjugate_preserves_reversible_parity() {
        let a = sample_matrix(2.0, 12, 11);
        assert!(a.parity_residual() < 1e-15);
        assert!(a.adjugate().parity_residual() < 1e-15);
    }

    #[test]
    fn compose_matches_map_semantics() {
        // (outer . inner)(x, y) steps through inner then outer
        let a = sample_matrix(2.0, 16, 21);
        let b = sample_matrix(3.0, 16, 22);
        let inner = SkewMap::new(Rotation::ALPHA, a);
        let outer = SkewMap::new(Rotation::ONE, b);
        let comp = outer.compose(&inner, 1.5).unwrap();
        for i in 0..=10 {
            let x = -0.6 + 0.12 * i as f64;
            let lhs = comp.eval_untranslated(x).unwrap();
            let rhs = outer
                .eval_untranslated(x + Rotation::ALPHA.value())
                .unwrap()
                .mul(&inner.eval_untranslated(x).unwrap());
            assert!(lhs.sub(&rhs).max_abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn compose_with_identity_outer() {
        let a = sample_matrix(2.0, 12, 5);
        let inner = SkewMap::new(Rotation::ALPHA, a.clone());
        let outer = SkewMap::new(Rotation::ZERO, MatrixFn::identity(3.0, 12));
        let comp = outer.compose(&inner, 1.5).unwrap();
        assert_eq!(comp.rotation(), Rotation::ALPHA);
        let diff = comp.matrix().sub(&a.restrict(1.5).unwrap()).unwrap().norm();
        assert!(diff < 1e-13);
    }

    #[test]
    fn compose_constant_matrices() {
        let mut ca = MatrixFn::identity(2.0, 4);
        ca.t = Series::constant(2.0, 1.5, 4);
        ca.u = Series::constant(2.0, 0.25, 4);
        let mut cb = MatrixFn::identity(2.0, 4);
        cb.v = Series::constant(2.0, -0.5, 4);
        let f = SkewMap::new(Rotation::ONE, cb.clone());
        let g = SkewMap::new(Rotation::ALPHA, ca.clone());
        let comp = f.compose(&g, 1.0).unwrap();
        assert_eq!(comp.rotation(), Rotation::new(1, 1));
        let expect = cb.eval(0.0).unwrap().mul(&ca.eval(0.0).unwrap());
        assert!(comp.matrix().eval(0.3).unwrap().sub(&expect).max_abs() < 1e-13);
    }

    #[test]
    fn inverse_composes_to_projective_identity() {
        let a = sample_matrix(2.0, 16, 31);
        let g = SkewMap::new(Rotation::ALPHA, a);
        let comp = g.compose(&g.inverse(), 1.0).unwrap();
        assert_eq!(comp.rotation(), Rotation::ZERO);
        // matrix = det * identity
        for i in 0..=10 {
            let x = -0.9 + 0.18 * i as f64;
            let m = comp.matrix().eval(x).unwrap();
            assert!(m.e[0][1].abs() < 1e-12 && m.e[1][0].abs() < 1e-12);
            assert!((m.e[0][0] - m.e[1][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn gfg_matches_two_compositions_and_preserves_reversibility() {
        let af = sample_matrix(3.0, 16, 41);
        let ag = sample_matrix(2.0, 16, 42);
        let f = SkewMap::new(Rotation::ONE.neg(), af);
        let g = SkewMap::new(Rotation::ALPHA, ag);
        let w = gfg(&f, &g, 0.5).unwrap();
        let w2 = g.compose(&f.compose(&g, 1.2).unwrap(), 0.5).unwrap();
        assert_eq!(w.rotation(), w2.rotation());
        // roundoff scales with the factor norms, not the (cancelling) result
        let scale = f.matrix().norm() * g.matrix().norm() * g.matrix().norm();
        let diff = w.matrix().sub(w2.matrix()).unwrap().norm();
        assert!(diff < 1e-12 * scale.max(1.0), "gfg vs compose: {diff}");
        assert!(w.parity_residual() < 1e-11 * w.matrix().norm().max(1.0));
    }

    #[test]
    fn gfg_with_identity_middle_is_g_squared() {
        let ag = sample_matrix(2.0, 16, 51);
        let f = SkewMap::new(Rotation::ZERO, MatrixFn::identity(2.0, 16));
        let g = SkewMap::new(Rotation::ALPHA, ag);
        let w = gfg(&f, &g, 0.5).unwrap();
        let g2 = g.compose(&g, 0.5).unwrap();
        assert_eq!(w.rotation(), g2.rotation());
        let diff = w.matrix().sub(g2.matrix()).unwrap().norm();
        assert!(diff < 1e-12 * g2.matrix().norm().max(1.0));
    }

    #[test]
    fn scale_matches_direct_conjugation() {
        let a = sample_matrix(2.0, 16, 61);
        let h = SkewMap::new(Rotation::new(-1, 2), a); // rotation alpha^3
        for &sigma in &[0.0, 0.3, -0.2] {
            let lam = ScalingLambda::golden(3, sigma);
            let scaled = h.scale(&lam, 2.0).unwrap();
            assert_eq!(scaled.rotation(), Rotation::ONE);
            let l = lam.matrix();
            let linv = Mat2::new(1.0 / l.e[0][0], 0.0, 0.0, 1.0 / l.e[1][1]);
            for i in 0..=20 {
                let x = -1.4 + 0.14 * i as f64;
                let lhs = scaled.eval_untranslated(x).unwrap();
                let rhs = linv
                    .mul(&h.eval_untranslated(lam.contraction() * x).unwrap())
                    .mul(&l);
                assert!(lhs.sub(&rhs).max_abs() < 1e-13, "sigma={sigma} x={x}");
            }
        }
    }

    #[test]
    fn scale_identity_matrix_stays_identity() {
        let id = MatrixFn::identity(2.0, 8);
        let h = SkewMap::new(Rotation::new(-1, 2), id.clone());
        let lam = ScalingLambda::golden(3, 0.7);
        let scaled = h.scale(&lam, 2.0).unwrap();
        assert!(scaled.matrix().sub(&id).unwrap().norm() < 1e-14);
    }

    #[test]
    fn equalize_sigma_examples() {
        let mut m = MatrixFn::identity(2.0, 4);
        m.u = Series::constant(2.0, 4.0, 4);
        m.v = Series::constant(2.0, 1.0, 4);
        let h = SkewMap::new(Rotation::ALPHA, m);
        let sigma = h.equalize_sigma().unwrap();
        assert!((sigma - 0.25 * 4.0_f64.ln()).abs() < 1e-15);

        let mut eq = MatrixFn::identity(2.0, 4);
        eq.u = Series::constant(2.0, -2.0, 4);
        eq.v = Series::constant(2.0, 2.0, 4);
        let h = SkewMap::new(Rotation::ALPHA, eq);
        assert_eq!(h.equalize_sigma().unwrap(), 0.0);

        let zero_u = MatrixFn::identity(2.0, 4);
        let h = SkewMap::new(Rotation::ALPHA, zero_u);
        assert!(h.equalize_sigma().is_err());
    }

    #[test]
    fn normalize_unit_determinant() {
        // the genuine analytic tail of det^{-1/2} must be negligible at the
        // test disk for the 1e-12 check, hence rho = 1 and a mild perturbation
        let mut a = sample_matrix(1.0, 24, 71).scale(0.3);
        a.t = a.t.add(&Series::constant(1.0, 1.1, 24)).unwrap();
        let n = a.normalize().unwrap();
        assert!(n.det_drift().unwrap() < 1e-12);
        // reversibility preserved
        assert!(n.parity_residual() < 1e-12 * n.norm());
        // determinant-1 input is unchanged
        let id = MatrixFn::identity(2.0, 8);
        assert!(id.normalize().unwrap().sub(&id).unwrap().norm() < 1e-14);
        // constant 2*identity normalizes to identity
        let two = id.scale(2.0);
        assert!(two.normalize().unwrap().sub(&id).unwrap().norm() < 1e-14);
    }

    #[test]
    fn dnormalize_matches_finite_difference() {
        let mut a = sample_matrix(1.0, 20, 81).scale(0.3);
        a.t = a.t.add(&Series::constant(1.0, 1.2, 20)).unwrap();
        let dot = sample_matrix(1.0, 20, 82);
        let eps = 1e-6;
        let plus = a.add(&dot.scale(eps)).unwrap().normalize().unwrap();
        let minus = a.sub(&dot.scale(eps)).unwrap().normalize().unwrap();
        let fd = plus.sub(&minus).unwrap().scale(0.5 / eps);
        let an = a.dnormalize(&dot).unwrap();
        let diff = fd.sub(&an).unwrap().norm();
        assert!(diff < 1e-8 * an.norm().max(1.0), "dN fd mismatch: {diff}");
    }

    #[test]
    fn ball_matrix_operations_contain_plain_path() {
        let a = sample_matrix(1.0, 12, 91);
        let b = sample_matrix(1.0, 12, 92);
        let ba = BallMatrixFn::from_plain(&a);
        let bb = BallMatrixFn::from_plain(&b);
        let plain = a.mat_mul(&b).unwrap();
        let ball = ba.mat_mul(&bb).unwrap();
        assert!(ball.norm().unwrap().contains(plain.norm()));

        let mut c = a.scale(0.3);
        c.t = c.t.add(&Series::constant(1.0, 1.3, 12)).unwrap();
        let plain_n = c.normalize().unwrap();
        let ball_n = BallMatrixFn::from_plain(&c).normalize(&c).unwrap();
        let diff = ball_n
            .sub(&BallMatrixFn::from_plain(&plain_n))
            .unwrap()
            .norm()
            .unwrap();
        assert!(diff.contains(0.0) || diff.lower() < 1e-12);
    }
}
