//! Fixed-point solving: Newton iteration in chart coordinates, the
//! quasi-Newton contraction, and sampled contraction estimates.

use super::{build_jacobian, rg_full, Chart, DerivMethod, Jacobian, Pair, RgOperator};
use crate::linalg::solve_lu;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Solved fixed point of the normalized three-step operator.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub pair: Pair,
    /// Scaling exponent at the fixed point.
    pub sigma_star: f64,
    /// `|| F(P*) - P* ||_rho` at the last iterate.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each Newton step.
    pub history: Vec<f64>,
}

/// Newton iteration `p <- p + (I - J)^{-1} (F(P) - P)` in chart
/// coordinates, with reversible parity re-imposed by the chart at every
/// step. The derivative is re-assembled each iteration.
pub fn solve_fixed_point(
    seed: &Pair,
    chart: &Chart,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    let mut x = chart.pack(seed);
    let mut history = Vec::new();
    for iter in 0..max_iter {
        let pair = chart.unpack(&x);
        let step = rg_full(&pair)?;
        let sigma = step.sigma;
        let fx = chart.pack(&step.pair);
        let residual = chart.weighted_norm(&(&fx - &x));
        history.push(residual);
        if residual < tol {
            return Ok(FixedPoint {
                pair,
                sigma_star: sigma,
                residual,
                iterations: iter,
                history,
            });
        }
        let jac = build_jacobian(&pair, chart, RgOperator::Full, DerivMethod::Analytic)?;
        let i_minus_j = DMatrix::identity(chart.dim(), chart.dim()) - &jac.matrix;
        let delta = solve_lu(&i_minus_j, &(&fx - &x))?;
        x += delta;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// The quasi-Newton contraction associated with the full operator at an
/// approximate fixed point: `M(p) = F(Pbar + (I - M) p) - Pbar + M p` with
/// `I - M = (I - J)^{-1}` on the chart and zero beyond.
pub struct QuasiNewton {
    chart: Chart,
    pbar: DVector<f64>,
    i_minus_j: DMatrix<f64>,
}

impl QuasiNewton {
    pub fn new(pbar: &Pair, chart: &Chart) -> Result<Self> {
        let jac = build_jacobian(pbar, chart, RgOperator::Full, DerivMethod::Analytic)?;
        let i_minus_j = DMatrix::identity(chart.dim(), chart.dim()) - &jac.matrix;
        Ok(QuasiNewton {
            chart: *chart,
            pbar: chart.pack(pbar),
            i_minus_j,
        })
    }

    /// Reuse an already assembled derivative (must be of the full operator).
    pub fn from_jacobian(pbar: &Pair, jac: &Jacobian) -> Result<Self> {
        if jac.operator != RgOperator::Full {
            return Err(Error::Other(
                "quasi-Newton map needs the derivative of the normalized operator".into(),
            ));
        }
        let dim = jac.chart.dim();
        Ok(QuasiNewton {
            chart: jac.chart,
            pbar: jac.chart.pack(pbar),
            i_minus_j: DMatrix::identity(dim, dim) - &jac.matrix,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Evaluate the contraction at `p` (chart coordinates).
    pub fn map(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        let q = solve_lu(&self.i_minus_j, p)?; // (I - M) p
        let shifted = self.chart.unpack(&(&self.pbar + &q));
        let image = rg_full(&shifted)?;
        let m_p = p - &q;
        Ok(self.chart.pack(&image.pair) - &self.pbar + m_p)
    }
}

/// Convenience wrapper matching the operator notation: evaluates the
/// quasi-Newton map at a displacement vector.
pub fn quasi_newton_map(op: &QuasiNewton, p: &DVector<f64>) -> Result<DVector<f64>> {
    op.map(p)
}

/// Sampled contraction bounds for the quasi-Newton map near an
/// approximate fixed point: `eps = ||M(0)||` and `K` a sampled lower bound
/// on `sup ||DM||` over the ball of radius `delta`.
#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub eps: f64,
    pub k: f64,
    pub delta: f64,
    /// `eps + K delta < delta`, the contraction inequality.
    pub contracts: bool,
    pub samples: usize,
}

/// Estimate the contraction constants by sampled directional derivatives:
/// random unit directions `d` at random points `p` with `||p|| <= delta`,
/// measuring `||M(p + h d) - M(p - h d)|| / (2 h)` in the weighted norm.
pub fn contraction_estimate(
    op: &QuasiNewton,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<ContractionReport> {
    let dim = op.chart.dim();
    let eps = op.chart.weighted_norm(&op.map(&DVector::zeros(dim))?);
    let mut state = seed.max(1);
    let mut rnd = move || {
        // xorshift64*; deterministic sampling is enough here
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut k: f64 = 0.0;
    let h = 1e-7;
    for _ in 0..samples {
        let mut d = DVector::from_fn(dim, |_, _| rnd());
        let dn = op.chart.weighted_norm(&d);
        d /= dn; // unit in the weighted norm
        let mut p = DVector::from_fn(dim, |_, _| rnd());
        let pn = op.chart.weighted_norm(&p);
        p *= rnd().abs() * 2.0 * delta / pn;
        let plus = op.map(&(&p + &d * h))?;
        let minus = op.map(&(&p - &d * h))?;
        let slope = op.chart.weighted_norm(&(plus - minus)) / (2.0 * h);
        k = k.max(slope);
    }
    Ok(ContractionReport {
        eps,
        k,
        delta,
        contracts: eps + k * delta < delta,
        samples,
    })
}
