//! Eigenvalues of the linearization and their classification against the
//! predicted trivial families.

use super::Jacobian;
use crate::{linalg, Result, ALPHA_STAR};
use num_complex::Complex64;

/// All eigenvalues of the derivative matrix, sorted by modulus descending.
pub fn jacobian_spectrum(jac: &Jacobian) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(&jac.matrix)
}

/// Predicted origin of an eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenTag {
    /// `alpha*^{3n}`: diagonal coordinate-change direction.
    CoordDiagonal { n: u32 },
    /// `-e^{+-2 sigma*} alpha*^{3n}`: off-diagonal coordinate change.
    CoordOffDiagonal { n: u32, sign: i8 },
    /// `-alpha*^{3n}`: commutator direction.
    Commutator { n: u32 },
    Nontrivial,
}

#[derive(Clone, Debug)]
pub struct TaggedEigenvalue {
    pub value: Complex64,
    pub tag: EigenTag,
}

/// Classification report for a computed spectrum.
#[derive(Clone, Debug)]
pub struct ClassifiedSpectrum {
    pub tagged: Vec<TaggedEigenvalue>,
    /// Predicted family values with no match in the spectrum
    /// (description, predicted value).
    pub absent: Vec<(String, f64)>,
    /// Whether an eigenvalue within tolerance of -1 is present (reported,
    /// never asserted: it belongs to a non-commuting direction).
    pub minus_one_present: bool,
    /// Count of (lambda, -lambda) pairs among well-separated eigenvalues,
    /// an observation reported without explanation.
    pub opposite_sign_pairs: usize,
}

const FAMILY_REL_TOL: f64 = 1e-4;

fn matches(value: Complex64, predicted: f64) -> bool {
    (value - Complex64::new(predicted, 0.0)).norm() <= FAMILY_REL_TOL * predicted.abs()
}

/// Tag each eigenvalue lying within relative `1e-4` of a predicted family
/// value: `alpha*^{3n}` and `-e^{+-2 sigma*} alpha*^{3n}` for `n >= 1`
/// (coordinate changes; the `n = 0` members are predicted but not
/// observed), and `-alpha*^{3n}` for `n >= 0` (commutator directions).
pub fn classify_trivial_eigenvalues(
    spectrum: &[Complex64],
    sigma_star: f64,
    n_max: u32,
) -> ClassifiedSpectrum {
    let e2s = (2.0 * sigma_star).exp();
    let mut families: Vec<(String, f64, EigenTag, bool)> = Vec::new();
    // n = 0 coordinate-change members: predicted by the formal argument,
    // recorded so their absence can be reported
    families.push((
        "coordinate diagonal n=0".into(),
        1.0,
        EigenTag::CoordDiagonal { n: 0 },
        false,
    ));
    for sign in [1i8, -1] {
        let val = -e2s.powi(sign as i32);
        families.push((
            format!("coordinate off-diagonal n=0 sign={sign:+}"),
            val,
            EigenTag::CoordOffDiagonal { n: 0, sign },
            false,
        ));
    }
    for n in 1..=n_max {
        let a3n = ALPHA_STAR.powi(3 * n as i32);
        families.push((
            format!("coordinate diagonal n={n}"),
            a3n,
            EigenTag::CoordDiagonal { n },
            false,
        ));
        for sign in [1i8, -1] {
            families.push((
                format!("coordinate off-diagonal n={n} sign={sign:+}"),
                -e2s.powi(sign as i32) * a3n,
                EigenTag::CoordOffDiagonal { n, sign },
                false,
            ));
        }
    }
    for n in 0..=n_max {
        families.push((
            format!("commutator n={n}"),
            -ALPHA_STAR.powi(3 * n as i32),
            EigenTag::Commutator { n },
            false,
        ));
    }

    let mut tagged = Vec::with_capacity(spectrum.len());
    for &value in spectrum {
        let mut tag = EigenTag::Nontrivial;
        for (_, predicted, fam_tag, seen) in families.iter_mut() {
            if matches(value, *predicted) {
                tag = fam_tag.clone();
                *seen = true;
                break;
            }
        }
        tagged.push(TaggedEigenvalue { value, tag });
    }

    let minus_one_present = tagged
        .iter()
        .any(|e| matches!(e.tag, EigenTag::Commutator { n: 0 }));

    let absent = families
        .iter()
        .filter(|(_, _, _, seen)| !seen)
        .map(|(name, val, _, _)| (name.clone(), *val))
        .collect();

    // opposite-sign observation: count real eigenvalue pairs (x, -x)
    let mut opposite = 0;
    let reals: Vec<f64> = spectrum
        .iter()
        .filter(|z| z.im.abs() < 1e-9 * z.norm().max(1e-12))
        .map(|z| z.re)
        .collect();
    for (i, &x) in reals.iter().enumerate() {
        if x <= 0.0 || x.abs() < 1e-6 {
            continue;
        }
        if reals
            .iter()
            .enumerate()
            .any(|(j, &y)| j != i && (y + x).abs() < 1e-6 * x.abs())
        {
            opposite += 1;
        }
    }

    ClassifiedSpectrum {
        tagged,
        absent,
        minus_one_present,
        opposite_sign_pairs: opposite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_tags_family_values() {
        let sigma: f64 = 0.5306282510621704; // log of the three-step factor
        let e2s = (2.0 * sigma).exp();
        let a3 = ALPHA_STAR.powi(3);
        let spec = vec![
            Complex64::new(30.79, 0.0),
            Complex64::new(1.0 / a3, 0.0),
            Complex64::new(-e2s * a3, 0.0),
            Complex64::new(a3, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(-a3, 0.0),
        ];
        let c = classify_trivial_eigenvalues(&spec, sigma, 2);
        assert_eq!(c.tagged[0].tag, EigenTag::Nontrivial);
        assert_eq!(c.tagged[1].tag, EigenTag::Nontrivial); // alpha^-3 is expanding, not in a family
        assert_eq!(c.tagged[2].tag, EigenTag::CoordOffDiagonal { n: 1, sign: 1 });
        assert_eq!(c.tagged[3].tag, EigenTag::CoordDiagonal { n: 1 });
        assert!(c.minus_one_present);
        assert_eq!(c.tagged[5].tag, EigenTag::Commutator { n: 1 });
        // the n=0 coordinate families are absent from this spectrum
        assert!(c.absent.iter().any(|(name, _)| name.contains("diagonal n=0")));
    }
}
