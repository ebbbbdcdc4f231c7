//! Golden-mean renormalization for SL(2,R) skew-product maps over circle
//! rotations, with applications to the almost Mathieu operator.
//!
//! A skew-product map `(alpha, A)` acts on the cylinder as
//! `(x, y) -> (x + alpha, A(x) y)` with `A` a 2x2 matrix-valued analytic
//! function. Pairs of such maps with rotations `(1, alpha*)`, where
//! `alpha* = (sqrt(5)-1)/2`, are renormalized by composing Fibonacci words
//! of the two maps and rescaling by the golden mean. This crate finds the
//! period-3 fixed point of that renormalization, its scaling constants and
//! linearization spectrum, and applies the machinery to the almost Mathieu
//! cocycle: spectrum bands and gap labels (Hofstadter butterfly), the
//! critical energy at the top of the self-dual spectrum, and the scaling
//! of the generalized eigenfunction there.
//!
//! Modules:
//! - [`ball`]: scalar enclosure arithmetic (center + radius).
//! - [`series`]: truncated Taylor series on a disk with weighted l1 norms.
//! - [`skew`]: matrix-valued analytic functions and skew-product maps.
//! - [`rg`]: the renormalization operators, fixed-point solver, Jacobian
//!   spectrum and verification checks.
//! - [`am`]: almost Mathieu cocycle, Chambers traces, bands, gap labels,
//!   butterfly scans and the critical-energy bootstrap.
//! - [`orbit`]: generalized-eigenfunction orbits and Fibonacci recurrence.

pub mod am;
pub mod ball;
pub mod io;
pub mod linalg;
pub mod orbit;
pub mod rg;
pub mod series;
pub mod skew;
pub mod svg;

mod error;

pub use error::{Error, Result};

/// The inverse golden mean `(sqrt(5) - 1) / 2`, fixed point of the Gauss map.
pub const ALPHA_STAR: f64 = 0.618_033_988_749_894_848_204_586_834_365;

/// Scalar type used for plain (non-enclosure) arithmetic.
pub type Scalar = f64;

#[cfg(test)]
mod tests {
    use super::ALPHA_STAR;

    #[test]
    fn alpha_star_matches_computed_value() {
        let a = (5.0_f64.sqrt() - 1.0) / 2.0;
        assert_eq!(a, ALPHA_STAR);
        // golden mean identity used throughout: a^2 = 1 - a
        assert!((ALPHA_STAR * ALPHA_STAR - (1.0 - ALPHA_STAR)).abs() < 1e-15);
    }
}
