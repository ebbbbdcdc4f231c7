//! Finite-dimensional derivative of a renormalization operator in chart
//! coordinates.

use super::{rg_full, rg_three_palindromic, Chart, Pair, ThreeStepDerivative};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Which operator the derivative is taken of.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RgOperator {
    /// The palindromic three-step operator (the spectrum reported in the
    /// eigenvalue table is this one's).
    Palindromic,
    /// Three-step followed by determinant normalization (used by the
    /// fixed-point solver).
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DerivMethod {
    /// Exact directional derivatives by the product rule.
    Analytic,
    /// Central finite differences with step `1e-6 max(1, |coeff|)`.
    CentralDiff,
}

/// Dense derivative matrix in chart coordinates, with its provenance.
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub matrix: DMatrix<f64>,
    pub chart: Chart,
    pub operator: RgOperator,
    pub method: DerivMethod,
}

fn operator_packed(p: &Pair, chart: &Chart, operator: RgOperator) -> Result<DVector<f64>> {
    let out = match operator {
        RgOperator::Palindromic => rg_three_palindromic(p)?.pair,
        RgOperator::Full => rg_full(p)?.pair,
    };
    Ok(chart.pack(&out))
}

/// Assemble the derivative of the chosen operator at `p`, column by
/// column over the chart basis. Columns are independent and evaluated in
/// parallel; assembly order is fixed by index, so the result is
/// deterministic.
pub fn build_jacobian(
    p: &Pair,
    chart: &Chart,
    operator: RgOperator,
    method: DerivMethod,
) -> Result<Jacobian> {
    let dim = chart.dim();
    let columns: Vec<Result<DVector<f64>>> = match method {
        DerivMethod::Analytic => {
            let prepared = ThreeStepDerivative::at(p)?;
            let normalized = operator == RgOperator::Full;
            (0..dim)
                .into_par_iter()
                .map(|j| {
                    let mut e = DVector::zeros(dim);
                    e[j] = 1.0;
                    let dir = chart.unpack_tangent(&e);
                    let out = prepared.apply(&dir, normalized)?;
                    Ok(chart.pack_tangent(&out))
                })
                .collect()
        }
        DerivMethod::CentralDiff => {
            let base = chart.pack(p);
            (0..dim)
                .into_par_iter()
                .map(|j| {
                    let h = 1e-6 * base[j].abs().max(1.0);
                    let mut plus = base.clone();
                    plus[j] += h;
                    let mut minus = base.clone();
                    minus[j] -= h;
                    let fp = operator_packed(&chart.unpack(&plus), chart, operator)?;
                    let fm = operator_packed(&chart.unpack(&minus), chart, operator)?;
                    Ok((fp - fm) / (2.0 * h))
                })
                .collect()
        }
    };
    let mut matrix = DMatrix::zeros(dim, dim);
    for (j, col) in columns.into_iter().enumerate() {
        matrix.set_column(j, &col?);
    }
    Ok(Jacobian { matrix, chart: *chart, operator, method })
}
