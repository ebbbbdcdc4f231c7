use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain violation in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("mismatched disk radii: {0} vs {1}")]
    RadiusMismatch(f64, f64),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("parity projection is lossy: discarded mass {discarded:.3e} exceeds {tol:.3e}")]
    LossyParity { discarded: f64, tol: f64 },

    #[error("normalization undefined: |det - 1| norm {0:.3e} >= 1")]
    NormalizeDomain(f64),

    #[error("sigma equalization undefined: off-diagonal value at 0 is {0:.3e}")]
    EqualizeUndefined(f64),

    #[error("evaluation point |x| = {x:.6} outside disk of radius {rho}")]
    OutsideDisk { x: f64, rho: f64 },

    #[error("rotation numbers of the pair must be exactly (1, alpha*), got ({0}, {1})")]
    BadRotations(f64, f64),

    #[error("radii (rho_F, rho_G) = ({rho_f}, {rho_g}) violate {cond}: {detail}")]
    DomainCondition {
        rho_f: f64,
        rho_g: f64,
        cond: &'static str,
        detail: String,
    },

    #[error("linear solve failed: {0}")]
    Singular(&'static str),

    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    #[error("solver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("bootstrap iterate left the domain at step {step}: {detail}")]
    BootstrapEscape { step: usize, detail: String },

    #[error("{what} requires gcd(p, q) = 1, got p = {p}, q = {q}")]
    NotCoprime { what: &'static str, p: i64, q: i64 },

    #[error("band count {found} != q = {q} after refinement")]
    BandCount { found: usize, q: i64 },

    #[error("no admissible gap index k with |k| <= {k_max} (best residual {residual:.3e})")]
    NoGapLabel { k_max: i64, residual: f64 },

    #[error("truncation degree {degree} too small: dropped cosine tail {tail:.3e} exceeds {tol:.3e}")]
    CosineTail { degree: usize, tail: f64, tol: f64 },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("too few peaks for growth fit: found {0}, need at least {1}")]
    TooFewPeaks(usize, usize),

    #[error("division by an interval containing zero (center {center:.3e}, radius {radius:.3e})")]
    BallDivByZero { center: f64, radius: f64 },

    #[error("{op} of an interval touching values <= 0 (center {center:.3e}, radius {radius:.3e})")]
    BallDomain {
        op: &'static str,
        center: f64,
        radius: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
