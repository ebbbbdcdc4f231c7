//! The commutator of a pair and the two matrix checks that upgrade a
//! fixed point of the palindromic operator to a commuting pair.

use super::Pair;
use crate::skew::{Mat2, MatrixFn};
use crate::{Result, ALPHA_STAR};
use num_complex::Complex64;

/// Matrix `C1` of the commutator `Theta = F G (G F)^{-1} = (0, C)`,
/// expressed in the variable `z` centered at `x = 1/(2 alpha*)` and
/// normalized to determinant 1. In translated components the four-factor
/// word reads
///
/// ```text
/// C1(z) = B0(z + a/2) A0(z - 1/2) adjB0(z - a/2) adjA0(z + 1/2)
/// ```
///
/// which keeps every factor well inside the stored disks for `|z| <= 1.5`
/// at the default radii.
pub fn commutator(p: &Pair, rho_z: f64) -> Result<MatrixFn> {
    let a = ALPHA_STAR;
    let b0 = p.f().matrix();
    let a0 = p.g().matrix();
    let word = b0
        .affine(1.0, 0.5 * a, rho_z)?
        .mat_mul(&a0.affine(1.0, -0.5, rho_z)?)?
        .mat_mul(&b0.adjugate().affine(1.0, -0.5 * a, rho_z)?)?
        .mat_mul(&a0.adjugate().affine(1.0, 0.5, rho_z)?)?;
    word.normalize()
}

/// The linearization matrix `A1(z) = A0(1/2 + alpha*^3 z) S e^{sigma S}`
/// as a series in `z`.
fn a1_series(p: &Pair, sigma_star: f64, rho_z: f64) -> Result<MatrixFn> {
    let a3 = ALPHA_STAR.powi(3);
    let shifted = p.g().matrix().affine(a3, 0.5, rho_z)?;
    Ok(shifted.mul_diag_right(sigma_star.exp(), -(-sigma_star).exp()))
}

/// Residual of the fixed-point recursion for the commutator,
/// `C1(a^3 z) A1(z) C1(z) = A1(z)` (the inverse-free rearrangement of the
/// renormalization identity for commutators).
pub fn commutator_recursion_residual(p: &Pair, sigma_star: f64, rho_z: f64) -> Result<f64> {
    let c1 = commutator(p, rho_z)?;
    let c1_scaled = c1.affine(ALPHA_STAR.powi(3), 0.0, rho_z)?;
    let a1 = a1_series(p, sigma_star, rho_z)?;
    let lhs = c1_scaled.mat_mul(&a1)?.mat_mul(&c1)?;
    Ok(lhs.sub(&a1)?.norm())
}

/// Pointwise checks at the origin: the scaled matrix `A1(0)` must have
/// eigenvalues with non-real squares, and the commutator `C1(0)` must not
/// have an eigenvalue -1. Failures are reported, not fatal.
#[derive(Clone, Debug)]
pub struct AiCiReport {
    pub a1_eigenvalues: (Complex64, Complex64),
    /// Distance of `arg(theta^2)` from `{0, pi}`, minimized over both
    /// eigenvalues.
    pub theta_sq_margin: f64,
    pub theta_nonreal: bool,
    pub det_a1: f64,
    /// `|theta1 theta2 - det A1(0)|`, a 2x2 spectral identity.
    pub eigen_product_defect: f64,
    pub c1_eigenvalues: (Complex64, Complex64),
    pub c1_max_dist_from_one: f64,
    pub c1_min_dist_from_minus_one: f64,
    pub c1_avoids_minus_one: bool,
}

const ANGLE_MARGIN: f64 = 1e-3;

pub fn check_aici(p_star: &Pair, sigma_star: f64) -> Result<AiCiReport> {
    let a0_half = p_star.g().matrix().eval(0.5)?;
    let l = Mat2::new(sigma_star.exp(), 0.0, 0.0, -(-sigma_star).exp());
    let a1 = a0_half.mul(&l);
    let (t1, t2) = a1.eigenvalues();
    let margin = |theta: Complex64| {
        let arg = (theta * theta).arg().abs();
        arg.min((std::f64::consts::PI - arg).abs())
    };
    let theta_sq_margin = margin(t1).min(margin(t2));
    let det_a1 = a1.det();
    let eigen_product_defect = (t1 * t2 - Complex64::new(det_a1, 0.0)).norm();

    let c1 = commutator(p_star, 1.0)?;
    let c10 = c1.eval(0.0)?;
    let (c1e1, c1e2) = c10.eigenvalues();
    let one = Complex64::new(1.0, 0.0);
    let c1_max_dist_from_one = (c1e1 - one).norm().max((c1e2 - one).norm());
    let c1_min_dist_from_minus_one = (c1e1 + one).norm().min((c1e2 + one).norm());

    Ok(AiCiReport {
        a1_eigenvalues: (t1, t2),
        theta_sq_margin,
        theta_nonreal: theta_sq_margin > ANGLE_MARGIN,
        det_a1,
        eigen_product_defect,
        c1_eigenvalues: (c1e1, c1e2),
        c1_max_dist_from_one,
        c1_min_dist_from_minus_one,
        c1_avoids_minus_one: c1_min_dist_from_minus_one > ANGLE_MARGIN,
    })
}
