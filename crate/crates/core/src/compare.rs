//! Scale-invariant comparison of Lagrangians.
//!
//! Lagrangians that differ by a positive factor describe the same optimal
//! control problem, so recovered and reference polynomials are compared after
//! normalizing their coefficient vectors.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::polynomial::{Monomial, Polynomial};

/// Similarity at or above which a recovery counts as successful.
pub const RECOVERY_THRESHOLD: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialResidual {
    pub monomial: String,
    pub first: f64,
    pub second: f64,
    /// `first - second` of the normalized coefficients.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Cosine of the angle between the normalized coefficient vectors.
    pub similarity: f64,
    pub max_residual: f64,
    pub residuals: Vec<MonomialResidual>,
}

impl SimilarityReport {
    pub fn is_recovered(&self) -> bool {
        self.similarity >= RECOVERY_THRESHOLD
    }
}

impl fmt::Display for SimilarityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "similarity {:.6} (max residual {:.3e})", self.similarity, self.max_residual)?;
        for r in &self.residuals {
            writeln!(f, "  {:>12} {:+.6} {:+.6} {:+.3e}", r.monomial, r.first, r.second, r.residual)?;
        }
        Ok(())
    }
}

/// Unit-norm coefficients, with the largest-magnitude coefficient made positive.
fn normalized(p: &Polynomial, monomials: &[Monomial]) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = monomials.iter().map(|m| p.coefficient(m)).collect();
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(CoreError::ZeroPolynomial);
    }
    // first one wins on ties so the sign choice is deterministic
    let lead = v.iter().copied().fold(0.0f64, |acc, c| if c.abs() > acc.abs() { c } else { acc });
    let k = lead.signum() / norm;
    for c in &mut v {
        *c *= k;
    }
    Ok(v)
}

pub fn compare_lagrangians(l1: &Polynomial, l2: &Polynomial) -> Result<SimilarityReport> {
    if l1.space() != l2.space() {
        return Err(CoreError::SpaceMismatch);
    }
    let monomials: Vec<Monomial> = l1
        .terms()
        .chain(l2.terms())
        .map(|(m, _)| m.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let a = normalized(l1, &monomials)?;
    let b = normalized(l2, &monomials)?;
    let similarity = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0);
    let residuals: Vec<MonomialResidual> = monomials
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(m, (&x, &y))| MonomialResidual {
            monomial: m.render(l1.space()),
            first: x,
            second: y,
            residual: x - y,
        })
        .collect();
    let max_residual = residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    Ok(SimilarityReport {
        similarity,
        max_residual,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::VariableSpace;

    fn lq(text: &str) -> Polynomial {
        let s = VariableSpace::new(2, 1, true).unwrap();
        Polynomial::parse(&s, text).unwrap()
    }

    #[test]
    fn positive_scaling_is_invisible() {
        let r = compare_lagrangians(
            &lq("2*x1^2 + 0.5*x1*x2 + x2^2 + u^2"),
            &lq("4*x1^2 + x1*x2 + 2*x2^2 + 2*u^2"),
        )
        .unwrap();
        assert!((r.similarity - 1.0).abs() < 1e-15);
        assert!(r.max_residual < 1e-15);
        assert!(r.is_recovered());
    }

    #[test]
    fn poor_recovery_is_flagged() {
        let target = lq("2*x1^2 + 0.5*x1*x2 + x2^2 + u^2");
        let r = compare_lagrangians(&lq("0.78*x1^2 + 0.82*x1*x2 + 2.11*x2^2 + 1.12*u^2"), &target).unwrap();
        // by hand: 5.2 / (sqrt(6.9873) * sqrt(6.25))
        let expected = 5.2 / (6.9873f64.sqrt() * 2.5);
        assert!((r.similarity - expected).abs() < 1e-12, "{r}");
        assert!(r.similarity < 0.95);
        assert!(!r.is_recovered());
        assert_eq!(r.residuals.len(), 4);
    }

    #[test]
    fn identity_and_sign() {
        let l = lq("x1^2 - 3*u^2");
        assert!((compare_lagrangians(&l, &l).unwrap().similarity - 1.0).abs() < 1e-15);
        assert!((compare_lagrangians(&l, &l.neg()).unwrap().similarity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_input_is_an_error() {
        assert!(matches!(
            compare_lagrangians(&lq("0"), &lq("x1")),
            Err(CoreError::ZeroPolynomial)
        ));
    }
}
