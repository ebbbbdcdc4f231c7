//! Renormalization of reversible pairs of skew-product maps.
//!
//! The state is a pair `P = (F, G)` with rotations exactly `(1, alpha*)`.
//! One step composes golden-mean words of the two maps and rescales; the
//! palindromic three-step form
//!
//! ```text
//! R3(P) = ( L3^-1 (G F^-1 G) L3 ,  L3^-1 (G^-1 F G^-1 F G^-1) L3 )
//! ```
//!
//! preserves reversibility even for non-commuting pairs, and agrees with
//! three ordinary steps on commuting pairs. Composing with the
//! normalization `A -> det(A)^{-1/2} A` on both components gives the
//! operator whose fixed point is solved for here; its scaling exponent
//! `sigma` and linearization spectrum are the quantities of interest.

mod commutator;
mod jacobian;
mod solve;
mod spectrum;
mod step;

pub use commutator::{check_aici, commutator, commutator_recursion_residual, AiCiReport};
pub use jacobian::{build_jacobian, DerivMethod, Jacobian, RgOperator};
pub use solve::{
    contraction_estimate, quasi_newton_map, solve_fixed_point, ContractionReport, FixedPoint,
    QuasiNewton,
};
pub use spectrum::{
    classify_trivial_eigenvalues, jacobian_spectrum, ClassifiedSpectrum, EigenTag,
    TaggedEigenvalue,
};
pub use step::{ball_residual_norm, rg_full, rg_single, rg_three_palindromic, ThreeStepDerivative};

use crate::skew::{MatrixFn, Rotation, SkewMap};
use crate::{Error, Result, ALPHA_STAR};
use nalgebra::DVector;

/// Ordered pair `(F, G)` of skew-product maps with rotations `(1, alpha*)`;
/// the renormalization state.
#[derive(Clone, Debug)]
pub struct Pair {
    f: SkewMap,
    g: SkewMap,
}

impl Pair {
    pub fn new(f: SkewMap, g: SkewMap) -> Result<Self> {
        if f.rotation() != Rotation::ONE || g.rotation() != Rotation::ALPHA {
            return Err(Error::BadRotations(
                f.rotation().value(),
                g.rotation().value(),
            ));
        }
        Ok(Pair { f, g })
    }

    pub fn f(&self) -> &SkewMap {
        &self.f
    }

    pub fn g(&self) -> &SkewMap {
        &self.g
    }

    pub fn rho_f(&self) -> f64 {
        self.f.rho()
    }

    pub fn rho_g(&self) -> f64 {
        self.g.rho()
    }

    pub fn degree(&self) -> usize {
        self.f.matrix().degree()
    }

    /// `||B0||_{rho_F} + ||A0||_{rho_G}`.
    pub fn norm(&self) -> f64 {
        self.f.matrix().norm() + self.g.matrix().norm()
    }

    pub fn parity_residual(&self) -> f64 {
        self.f.parity_residual() + self.g.parity_residual()
    }

    /// Norm of the componentwise difference.
    pub fn diff_norm(&self, other: &Pair) -> Result<f64> {
        Ok(self.f.matrix().sub(other.f.matrix())?.norm()
            + self.g.matrix().sub(other.g.matrix())?.norm())
    }
}

/// Tangent vector at a pair: matrix perturbations with the rotations held
/// fixed.
#[derive(Clone, Debug)]
pub struct Tangent {
    pub f: MatrixFn,
    pub g: MatrixFn,
}

/// Domain condition for the single-step operator:
/// `alpha^-2 / 2 <= rho_G` and `alpha/2 + alpha rho_G <= rho_F <= rho_G / alpha`.
pub fn check_domain_single(rho_f: f64, rho_g: f64) -> Result<f64> {
    let a = ALPHA_STAR;
    let slack = 1e-9;
    let lhs_g = 0.5 / (a * a);
    if lhs_g > rho_g * (1.0 + slack) {
        return Err(Error::DomainCondition {
            rho_f,
            rho_g,
            cond: "single-step domain condition",
            detail: format!("alpha^-2/2 = {:.4} <= rho_G = {} fails", lhs_g, rho_g),
        });
    }
    let lo_f = 0.5 * a + a * rho_g;
    let hi_f = rho_g / a;
    if lo_f > rho_f * (1.0 + slack) || rho_f > hi_f * (1.0 + slack) {
        return Err(Error::DomainCondition {
            rho_f,
            rho_g,
            cond: "single-step domain condition",
            detail: format!(
                "alpha/2 + alpha rho_G = {:.4} <= rho_F = {} <= rho_G/alpha = {:.4} fails",
                lo_f, rho_f, hi_f
            ),
        });
    }
    Ok((rho_g - lhs_g).min(rho_f - lo_f).min(hi_f - rho_f))
}

/// Domain condition for the three-step operator:
/// `1/2 <= rho_G <= rho_F <= alpha^-3 rho_G - alpha^-1 / 2`.
pub fn check_domain_three(rho_f: f64, rho_g: f64) -> Result<f64> {
    let a = ALPHA_STAR;
    let slack = 1e-9;
    let hi_f = rho_g / (a * a * a) - 0.5 / a;
    if 0.5 > rho_g * (1.0 + slack)
        || rho_g > rho_f * (1.0 + slack)
        || rho_f > hi_f * (1.0 + slack)
    {
        return Err(Error::DomainCondition {
            rho_f,
            rho_g,
            cond: "three-step domain condition",
            detail: format!(
                "1/2 <= rho_G = {} <= rho_F = {} <= alpha^-3 rho_G - alpha^-1/2 = {:.4} fails",
                rho_g, rho_f, hi_f
            ),
        });
    }
    Ok((rho_g - 0.5).min(rho_f - rho_g).min(hi_f - rho_f))
}

/// Result of one renormalization step.
#[derive(Clone, Debug)]
pub struct RgResult {
    pub pair: Pair,
    /// Scaling exponent chosen by the equalization rule for this step.
    pub sigma: f64,
    pub diagnostics: StepDiagnostics,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StepDiagnostics {
    /// Reversible-parity mass of the output relative to its norm.
    pub parity_drift: f64,
    /// `|| det - 1 ||` of the output components (after normalization for
    /// the full operator, before it otherwise).
    pub det_drift: f64,
    /// Smallest slack in the active domain condition.
    pub domain_margin: f64,
}

/// Finite-dimensional chart on the reversible subspace: the independent
/// coefficients are the even ones of `t, u, v` and the odd ones of `s`,
/// for both matrices. The pack/unpack round trip is lossless exactly on
/// reversible pairs.
#[derive(Clone, Copy, Debug)]
pub struct Chart {
    pub degree: usize,
    pub rho_f: f64,
    pub rho_g: f64,
}

impl Chart {
    pub fn new(degree: usize, rho_f: f64, rho_g: f64) -> Self {
        Chart { degree, rho_f, rho_g }
    }

    fn even_count(&self) -> usize {
        self.degree / 2 + 1
    }

    fn odd_count(&self) -> usize {
        self.degree.div_ceil(2)
    }

    /// Coefficients per matrix: three even components plus one odd.
    pub fn per_matrix(&self) -> usize {
        3 * self.even_count() + self.odd_count()
    }

    pub fn dim(&self) -> usize {
        2 * self.per_matrix()
    }

    fn pack_matrix(&self, m: &MatrixFn, out: &mut Vec<f64>) {
        for comp in [&m.t, &m.u, &m.v] {
            for k in (0..=self.degree).step_by(2) {
                out.push(comp.coeff(k));
            }
        }
        for k in (1..=self.degree).step_by(2) {
            out.push(m.s.coeff(k));
        }
    }

    pub fn pack(&self, p: &Pair) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.pack_matrix(p.f.matrix(), &mut out);
        self.pack_matrix(p.g.matrix(), &mut out);
        DVector::from_vec(out)
    }

    pub fn pack_tangent(&self, t: &Tangent) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.pack_matrix(&t.f, &mut out);
        self.pack_matrix(&t.g, &mut out);
        DVector::from_vec(out)
    }

    fn unpack_matrix(&self, rho: f64, data: &[f64]) -> MatrixFn {
        use crate::series::Series;
        let ne = self.even_count();
        let mut comps = Vec::with_capacity(3);
        for c in 0..3 {
            let mut s = Series::zero(rho, self.degree);
            for (i, k) in (0..=self.degree).step_by(2).enumerate() {
                s.coeffs_mut()[k] = data[c * ne + i];
            }
            comps.push(s);
        }
        let mut s_odd = Series::zero(rho, self.degree);
        for (i, k) in (1..=self.degree).step_by(2).enumerate() {
            s_odd.coeffs_mut()[k] = data[3 * ne + i];
        }
        let v = comps.pop().unwrap();
        let u = comps.pop().unwrap();
        let t = comps.pop().unwrap();
        MatrixFn { t, u, v, s: s_odd }
    }

    pub fn unpack(&self, v: &DVector<f64>) -> Pair {
        let per = self.per_matrix();
        let fm = self.unpack_matrix(self.rho_f, &v.as_slice()[..per]);
        let gm = self.unpack_matrix(self.rho_g, &v.as_slice()[per..]);
        Pair {
            f: SkewMap::new(Rotation::ONE, fm),
            g: SkewMap::new(Rotation::ALPHA, gm),
        }
    }

    pub fn unpack_tangent(&self, v: &DVector<f64>) -> Tangent {
        let per = self.per_matrix();
        Tangent {
            f: self.unpack_matrix(self.rho_f, &v.as_slice()[..per]),
            g: self.unpack_matrix(self.rho_g, &v.as_slice()[per..]),
        }
    }

    /// The pair norm `||.||_rho` expressed on packed coordinates.
    pub fn weighted_norm(&self, v: &DVector<f64>) -> f64 {
        let per = self.per_matrix();
        let mut total = 0.0;
        for (ofs, rho) in [(0, self.rho_f), (per, self.rho_g)] {
            let ne = self.even_count();
            for c in 0..3 {
                for (i, k) in (0..=self.degree).step_by(2).enumerate() {
                    total += v[ofs + c * ne + i].abs() * rho.powi(k as i32);
                }
            }
            for (i, k) in (1..=self.degree).step_by(2).enumerate() {
                total += v[ofs + 3 * ne + i].abs() * rho.powi(k as i32);
            }
        }
        total
    }
}
