//! The renormalization steps, their directional derivatives, and a
//! ball-arithmetic residual evaluation.

use super::{check_domain_single, check_domain_three, Pair, RgResult, StepDiagnostics, Tangent};
use crate::ball::Ball;
use crate::series::Series;
use crate::skew::{gfg, BallMatrixFn, MatrixFn, Rotation, ScalingLambda, SkewMap};
use crate::{Result, ALPHA_STAR};

fn diagnostics(pair: &Pair, margin: f64) -> Result<StepDiagnostics> {
    let norm = pair.norm().max(1e-300);
    Ok(StepDiagnostics {
        parity_drift: pair.parity_residual() / norm,
        det_drift: pair
            .f()
            .matrix()
            .det_drift()?
            .max(pair.g().matrix().det_drift()?),
        domain_margin: margin,
    })
}

/// One step of the golden-mean renormalization:
/// `R(P) = (L1^-1 G L1, L1^-1 F G^-1 L1)` with the scaling exponent chosen
/// by the equalization rule on the new first component.
pub fn rg_single(p: &Pair) -> Result<RgResult> {
    let margin = check_domain_single(p.rho_f(), p.rho_g())?;
    // tails restart every step: they diagnose this step's truncation
    let f = SkewMap::new(p.f().rotation(), p.f().matrix().strip_tails());
    let g = SkewMap::new(p.g().rotation(), p.g().matrix().strip_tails());
    let sigma = g.equalize_sigma()?;
    let lam = ScalingLambda::golden(1, sigma);
    let new_f = g.scale(&lam, p.rho_f())?;
    let h = f.compose(&g.inverse(), ALPHA_STAR * p.rho_g())?;
    let new_g = h.scale(&lam, p.rho_g())?;
    let pair = Pair::new(new_f, new_g)?;
    let diagnostics = diagnostics(&pair, margin)?;
    Ok(RgResult { pair, sigma, diagnostics })
}

struct ThreeStep {
    f: SkewMap,
    g: SkewMap,
    sigma: f64,
}

/// Shared core of the palindromic three-step operator.
fn three_core(p: &Pair) -> Result<ThreeStep> {
    let a3 = ALPHA_STAR.powi(3);
    let rho_hf = a3 * p.rho_f();
    let rho_hg = a3 * p.rho_g();
    // tails restart every step: they diagnose this step's truncation
    let f = SkewMap::new(p.f().rotation(), p.f().matrix().strip_tails());
    let g = SkewMap::new(p.g().rotation(), p.g().matrix().strip_tails());
    let finv = f.inverse();
    let ginv = g.inverse();
    // H_F = G F^-1 G, rotation 2 alpha - 1 = alpha^3
    let hf = gfg(&finv, &g, rho_hf)?;
    debug_assert_eq!(hf.rotation(), Rotation::new(-1, 2));
    // H_G = G^-1 (F G^-1 F) G^-1, rotation 2 - 3 alpha = alpha^4
    let inner = gfg(&ginv, &f, rho_hg)?;
    let hg = gfg(&inner, &ginv, rho_hg)?;
    debug_assert_eq!(hg.rotation(), Rotation::new(2, -3));
    // only the first component determines sigma; the same scaling is then
    // applied to both
    let sigma = hf.equalize_sigma()?;
    let lam = ScalingLambda::golden(3, sigma);
    let f = hf.scale(&lam, p.rho_f())?;
    let g = hg.scale(&lam, p.rho_g())?;
    Ok(ThreeStep { f, g, sigma })
}

/// The palindromic three-step operator
/// `R3(P) = (L3^-1 G F^-1 G L3, L3^-1 G^-1 F G^-1 F G^-1 L3)`.
/// Output rotations are again `(1, alpha*)`; reversibility is preserved
/// even for non-commuting pairs.
pub fn rg_three_palindromic(p: &Pair) -> Result<RgResult> {
    let margin = check_domain_three(p.rho_f(), p.rho_g())?;
    let step = three_core(p)?;
    let pair = Pair::new(step.f, step.g)?;
    let diagnostics = diagnostics(&pair, margin)?;
    Ok(RgResult { pair, sigma: step.sigma, diagnostics })
}

/// The full operator: palindromic three-step followed by the determinant
/// normalization of both components.
pub fn rg_full(p: &Pair) -> Result<RgResult> {
    let margin = check_domain_three(p.rho_f(), p.rho_g())?;
    let step = three_core(p)?;
    let pair = Pair::new(step.f.normalize()?, step.g.normalize()?)?;
    let diagnostics = diagnostics(&pair, margin)?;
    Ok(RgResult { pair, sigma: step.sigma, diagnostics })
}

/// Prepared directional derivative of the three-step operator at a fixed
/// pair. The shifted base factors are computed once; each direction then
/// costs a handful of products (product rule on the two palindromic words,
/// the equalization exponent, the scaling, and optionally the
/// normalization).
pub struct ThreeStepDerivative {
    rho_f: f64,
    rho_g: f64,
    rho_hf: f64,
    rho_hg: f64,
    delta_f: f64,
    delta_i: f64,
    delta_g: f64,
    // shifted base factors of H_F = A(+dF) adjB A(-dF)
    a_pf: MatrixFn,
    a_mf: MatrixFn,
    adj_b_mid: MatrixFn,
    // shifted base factors of Inner = B(+dI) adjA B(-dI)
    b_pi: MatrixFn,
    b_mi: MatrixFn,
    adj_a_mid: MatrixFn,
    inner: MatrixFn,
    // shifted base factors of H_G = adjA(+dG) Inner adjA(-dG)
    adj_a_pg: MatrixFn,
    adj_a_mg: MatrixFn,
    // composed words and scaling data
    hf: MatrixFn,
    hg: MatrixFn,
    sigma: f64,
    u0: f64,
    v0: f64,
    // scaled outputs and their det^{-1/2} factors (for the normalized map)
    scaled_f: MatrixFn,
    scaled_g: MatrixFn,
    r_f: Series,
    r_g: Series,
}

impl ThreeStepDerivative {
    pub fn at(p: &Pair) -> Result<Self> {
        check_domain_three(p.rho_f(), p.rho_g())?;
        let a3 = ALPHA_STAR.powi(3);
        let rho_hf = a3 * p.rho_f();
        let rho_hg = a3 * p.rho_g();
        let a = p.g().matrix();
        let b = p.f().matrix();
        // H_F: delta = (rot(F^-1) + rot(G)) / 2 = (alpha - 1) / 2
        let delta_f = 0.5 * (ALPHA_STAR - 1.0);
        let a_pf = a.affine(1.0, delta_f, rho_hf)?;
        let a_mf = a.affine(1.0, -delta_f, rho_hf)?;
        let adj_b_mid = b.adjugate().restrict(rho_hf)?;
        let hf = a_pf.mat_mul(&adj_b_mid)?.mat_mul(&a_mf)?;
        // Inner: delta = (rot(G^-1) + rot(F)) / 2 = (1 - alpha) / 2
        let delta_i = 0.5 * (1.0 - ALPHA_STAR);
        let b_pi = b.affine(1.0, delta_i, rho_hg)?;
        let b_mi = b.affine(1.0, -delta_i, rho_hg)?;
        let adj_a_mid = a.adjugate().restrict(rho_hg)?;
        let inner = b_pi.mat_mul(&adj_a_mid)?.mat_mul(&b_mi)?;
        // H_G: delta = (rot(Inner) + rot(G^-1)) / 2 = 1 - alpha
        let delta_g = 1.0 - ALPHA_STAR;
        let adj_a_pg = a.adjugate().affine(1.0, delta_g, rho_hg)?;
        let adj_a_mg = a.adjugate().affine(1.0, -delta_g, rho_hg)?;
        let hg = adj_a_pg.mat_mul(&inner)?.mat_mul(&adj_a_mg)?;
        let u0 = hf.u.coeff(0);
        let v0 = hf.v.coeff(0);
        if u0 == 0.0 || v0 == 0.0 {
            return Err(crate::Error::EqualizeUndefined(u0.min(v0)));
        }
        let sigma = 0.25 * (u0 / v0).abs().ln();
        let scaled_f = hf.scale_conjugate(a3, sigma, p.rho_f())?;
        let scaled_g = hg.scale_conjugate(a3, sigma, p.rho_g())?;
        let r_f = scaled_f.det_inv_sqrt()?;
        let r_g = scaled_g.det_inv_sqrt()?;
        Ok(ThreeStepDerivative {
            rho_f: p.rho_f(),
            rho_g: p.rho_g(),
            rho_hf,
            rho_hg,
            delta_f,
            delta_i,
            delta_g,
            a_pf,
            a_mf,
            adj_b_mid,
            b_pi,
            b_mi,
            adj_a_mid,
            inner,
            adj_a_pg,
            adj_a_mg,
            hf,
            hg,
            sigma,
            u0,
            v0,
            scaled_f,
            scaled_g,
            r_f,
            r_g,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Base-point value of the operator (normalized or not).
    pub fn value(&self, normalized: bool) -> Result<(MatrixFn, MatrixFn)> {
        if normalized {
            Ok((self.scaled_f.normalize()?, self.scaled_g.normalize()?))
        } else {
            Ok((self.scaled_f.clone(), self.scaled_g.clone()))
        }
    }

    /// Derivative of the scaling conjugation, including the dependence of
    /// the equalization exponent on the pair.
    fn d_scale(
        base: &MatrixFn,
        dot: &MatrixFn,
        c: f64,
        sigma: f64,
        sigma_dot: f64,
        rho_out: f64,
    ) -> Result<MatrixFn> {
        let eu = -(-2.0 * sigma).exp();
        let ev = -(2.0 * sigma).exp();
        let u = dot
            .u
            .affine(c, 0.0, rho_out)?
            .add(&base.u.affine(c, 0.0, rho_out)?.scale(-2.0 * sigma_dot))?
            .scale(eu);
        let v = dot
            .v
            .affine(c, 0.0, rho_out)?
            .add(&base.v.affine(c, 0.0, rho_out)?.scale(2.0 * sigma_dot))?
            .scale(ev);
        Ok(MatrixFn {
            t: dot.t.affine(c, 0.0, rho_out)?,
            u,
            v,
            s: dot.s.affine(c, 0.0, rho_out)?,
        })
    }

    /// Apply the derivative to a tangent direction; `normalized` selects
    /// between the plain three-step operator and the determinant-normalized
    /// one.
    pub fn apply(&self, q: &Tangent, normalized: bool) -> Result<Tangent> {
        let a3 = ALPHA_STAR.powi(3);
        let da = &q.g;
        let db = &q.f;
        // product rule on H_F = A(+dF) adjB A(-dF)
        let da_pf = da.affine(1.0, self.delta_f, self.rho_hf)?;
        let da_mf = da.affine(1.0, -self.delta_f, self.rho_hf)?;
        let dadj_b = db.adjugate().restrict(self.rho_hf)?;
        let dhf = da_pf
            .mat_mul(&self.adj_b_mid)?
            .mat_mul(&self.a_mf)?
            .add(&self.a_pf.mat_mul(&dadj_b)?.mat_mul(&self.a_mf)?)?
            .add(&self.a_pf.mat_mul(&self.adj_b_mid)?.mat_mul(&da_mf)?)?;
        // product rule on Inner = B(+dI) adjA B(-dI)
        let db_pi = db.affine(1.0, self.delta_i, self.rho_hg)?;
        let db_mi = db.affine(1.0, -self.delta_i, self.rho_hg)?;
        let dadj_a = da.adjugate().restrict(self.rho_hg)?;
        let dinner = db_pi
            .mat_mul(&self.adj_a_mid)?
            .mat_mul(&self.b_mi)?
            .add(&self.b_pi.mat_mul(&dadj_a)?.mat_mul(&self.b_mi)?)?
            .add(&self.b_pi.mat_mul(&self.adj_a_mid)?.mat_mul(&db_mi)?)?;
        // product rule on H_G = adjA(+dG) Inner adjA(-dG)
        let dadj_a_pg = da.adjugate().affine(1.0, self.delta_g, self.rho_hg)?;
        let dadj_a_mg = da.adjugate().affine(1.0, -self.delta_g, self.rho_hg)?;
        let dhg = dadj_a_pg
            .mat_mul(&self.inner)?
            .mat_mul(&self.adj_a_mg)?
            .add(&self.adj_a_pg.mat_mul(&dinner)?.mat_mul(&self.adj_a_mg)?)?
            .add(&self.adj_a_pg.mat_mul(&self.inner)?.mat_mul(&dadj_a_mg)?)?;
        // equalization exponent: sigma = (1/4) log |u0/v0|
        let sigma_dot = 0.25 * (dhf.u.coeff(0) / self.u0 - dhf.v.coeff(0) / self.v0);
        let df = Self::d_scale(&self.hf, &dhf, a3, self.sigma, sigma_dot, self.rho_f)?;
        let dg = Self::d_scale(&self.hg, &dhg, a3, self.sigma, sigma_dot, self.rho_g)?;
        if !normalized {
            return Ok(Tangent { f: df, g: dg });
        }
        Ok(Tangent {
            f: self.scaled_f.dnormalize_with(&self.r_f, &df)?,
            g: self.scaled_g.dnormalize_with(&self.r_g, &dg)?,
        })
    }
}

/// Enclosure of `|| F(P) - P ||_rho` where `F` is the full operator,
/// evaluated in ball arithmetic. The centers follow exactly the plain
/// pipeline; radii and tail bounds carry every rounding and truncation
/// contribution, mirroring the validated-arithmetic structure of the
/// original computer-assisted setup at 64-bit scale.
pub fn ball_residual_norm(p: &Pair) -> Result<Ball> {
    check_domain_three(p.rho_f(), p.rho_g())?;
    let alpha = Ball::inexact(ALPHA_STAR);
    let a3 = alpha.mul(&alpha)?.mul(&alpha)?;
    let rho_hf = ALPHA_STAR.powi(3) * p.rho_f();
    let rho_hg = ALPHA_STAR.powi(3) * p.rho_g();
    let a = BallMatrixFn::from_plain(p.g().matrix());
    let b = BallMatrixFn::from_plain(p.f().matrix());
    let half = Ball::exact(0.5);
    let one = Ball::exact(1.0);

    // H_F = A(+dF) adjB A(-dF), dF = (alpha - 1)/2
    let delta_f = alpha.sub(&one)?.mul(&half)?;
    let hf = a
        .affine(&one, &delta_f, rho_hf)?
        .mat_mul(&b.adjugate()?.restrict(rho_hf)?)?
        .mat_mul(&a.affine(&one, &delta_f.neg(), rho_hf)?)?;
    // Inner = B(+dI) adjA B(-dI), dI = (1 - alpha)/2
    let delta_i = one.sub(&alpha)?.mul(&half)?;
    let inner = b
        .affine(&one, &delta_i, rho_hg)?
        .mat_mul(&a.adjugate()?.restrict(rho_hg)?)?
        .mat_mul(&b.affine(&one, &delta_i.neg(), rho_hg)?)?;
    // H_G = adjA(+dG) Inner adjA(-dG), dG = 1 - alpha
    let delta_g = one.sub(&alpha)?;
    let adj_a = a.adjugate()?;
    let hg = adj_a
        .affine(&one, &delta_g, rho_hg)?
        .mat_mul(&inner)?
        .mat_mul(&adj_a.affine(&one, &delta_g.neg(), rho_hg)?)?;

    let sigma = hf.equalize_sigma()?;
    let scaled_f = hf.scale_conjugate(&a3, &sigma, p.rho_f())?;
    let scaled_g = hg.scale_conjugate(&a3, &sigma, p.rho_g())?;

    // plain counterparts provide the approximate inverse-sqrt factors
    let plain = three_core(p)?;
    let new_f = scaled_f.normalize(plain.f.matrix())?;
    let new_g = scaled_g.normalize(plain.g.matrix())?;

    new_f
        .sub(&BallMatrixFn::from_plain(p.f().matrix()))?
        .norm()?
        .add(&new_g.sub(&BallMatrixFn::from_plain(p.g().matrix()))?.norm()?)
}
