//! Dense linear algebra helpers: LU solves and nonsymmetric eigenvalues.
//!
//! Eigenvalues go through a Parlett-Reinsch balancing pass followed by the
//! real Schur decomposition (Hessenberg reduction plus Francis QR steps).

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve_lu(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::Singular("LU solve"))
}

/// Balance a square matrix by diagonal powers of two so that row and
/// column norms match; similarity-invariant for eigenvalues but much
/// friendlier to the QR iteration.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let mut r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / radix {
                c *= radix;
                r /= radix;
                f *= radix;
            }
            while c >= r * radix {
                c /= radix;
                r *= radix;
                f /= radix;
            }
            if (c + r) < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// All eigenvalues of a dense real matrix, sorted by modulus descending.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut m = a.clone();
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-14, 0).ok_or(Error::EigenFailure)?;
    let eig = schur.complex_eigenvalues();
    let mut out: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    out.sort_by(|x, y| {
        y.norm()
            .partial_cmp(&x.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}
