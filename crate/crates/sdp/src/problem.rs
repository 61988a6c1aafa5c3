//! Block-diagonal SDP in primal standard form.
//!
//! ```text
//! minimize    sum_b <C_b, X_b> + c_f . v
//! subject to  <A_i, X> + f_i . v  = b_i     (equality rows)
//!             <A_i, X> + f_i . v <= b_i     (inequality rows)
//!             X_b PSD,  v free
//! ```
//!
//! Coefficients on PSD blocks address the independent entries `X[row][col]`
//! with `row <= col`: a term `(Psd { block, row, col }, a)` contributes
//! `a * X[row][col]` once, whether or not the entry is diagonal.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Result, SdpError};

/// A scalar decision variable of an [`SdpProblem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Free(usize),
    Psd { block: usize, row: usize, col: usize },
}

impl VarRef {
    /// Entry of a PSD block; the pair is stored in upper-triangle order.
    pub fn psd(block: usize, row: usize, col: usize) -> Self {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        VarRef::Psd { block, row, col }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Free(k) => write!(f, "v[{k}]"),
            VarRef::Psd { block, row, col } => write!(f, "X{block}[{row},{col}]"),
        }
    }
}

/// Sparse linear functional over the decision variables, kept sorted by variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearExpr {
    terms: Vec<(VarRef, f64)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an expression, summing duplicate variables and dropping exact zeros.
    pub fn from_terms<I: IntoIterator<Item = (VarRef, f64)>>(terms: I) -> Self {
        let mut acc: BTreeMap<VarRef, f64> = BTreeMap::new();
        for (var, coef) in terms {
            let var = match var {
                VarRef::Psd { block, row, col } => VarRef::psd(block, row, col),
                v => v,
            };
            *acc.entry(var).or_insert(0.0) += coef;
        }
        Self {
            terms: acc.into_iter().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn terms(&self) -> &[(VarRef, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, var: VarRef) -> f64 {
        self.terms
            .binary_search_by(|(v, _)| v.cmp(&var))
            .map(|k| self.terms[k].1)
            .unwrap_or(0.0)
    }
}

/// One linear row: `expr = rhs` or `expr <= rhs` depending on where it is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub expr: LinearExpr,
    pub rhs: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsdBlock {
    pub size: usize,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeScalar {
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub psd_blocks: Vec<PsdBlock>,
    pub free_scalars: Vec<FreeScalar>,
    pub objective: LinearExpr,
    pub eq_constraints: Vec<LinearRow>,
    pub ineq_constraints: Vec<LinearRow>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_psd_block(&mut self, size: usize, label: impl Into<String>) -> usize {
        self.psd_blocks.push(PsdBlock {
            size,
            label: label.into(),
        });
        self.psd_blocks.len() - 1
    }

    pub fn add_free(&mut self, label: impl Into<String>) -> usize {
        self.free_scalars.push(FreeScalar {
            label: label.into(),
        });
        self.free_scalars.len() - 1
    }

    pub fn add_eq(&mut self, expr: LinearExpr, rhs: f64, label: impl Into<String>) -> usize {
        self.eq_constraints.push(LinearRow {
            expr,
            rhs,
            label: label.into(),
        });
        self.eq_constraints.len() - 1
    }

    pub fn add_ineq(&mut self, expr: LinearExpr, rhs: f64, label: impl Into<String>) -> usize {
        self.ineq_constraints.push(LinearRow {
            expr,
            rhs,
            label: label.into(),
        });
        self.ineq_constraints.len() - 1
    }

    pub fn set_objective(&mut self, expr: LinearExpr) {
        self.objective = expr;
    }

    pub fn num_rows(&self) -> usize {
        self.eq_constraints.len() + self.ineq_constraints.len()
    }

    /// Number of scalar unknowns counting each symmetric block by its upper triangle.
    pub fn num_scalar_vars(&self) -> usize {
        self.free_scalars.len()
            + self
                .psd_blocks
                .iter()
                .map(|b| b.size * (b.size + 1) / 2)
                .sum::<usize>()
    }

    fn check_var(&self, var: VarRef) -> bool {
        match var {
            VarRef::Free(k) => k < self.free_scalars.len(),
            VarRef::Psd { block, row, col } => self
                .psd_blocks
                .get(block)
                .is_some_and(|b| row <= col && col < b.size),
        }
    }

    /// Checks that every coefficient is finite and references a declared variable.
    pub fn validate(&self) -> Result<()> {
        if self.num_rows() == 0 && self.objective.is_empty() {
            return Err(SdpError::EmptyProblem);
        }
        let rows = self
            .eq_constraints
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("eq {i}"), &r.expr, r.rhs))
            .chain(
                self.ineq_constraints
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (format!("ineq {i}"), &r.expr, r.rhs)),
            )
            .chain(std::iter::once(("objective".to_string(), &self.objective, 0.0)));
        for (name, expr, rhs) in rows {
            if !rhs.is_finite() {
                return Err(SdpError::NonFinite(name));
            }
            for &(var, coef) in expr.terms() {
                if !coef.is_finite() {
                    return Err(SdpError::NonFinite(name));
                }
                if !self.check_var(var) {
                    return Err(SdpError::DanglingReference {
                        row: name,
                        var: var.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Human-readable size summary used by the CLI before routing a problem.
    pub fn size_summary(&self) -> String {
        let max_block = self.psd_blocks.iter().map(|b| b.size).max().unwrap_or(0);
        format!(
            "{} eq rows, {} ineq rows, {} PSD blocks (largest {}), {} free scalars, {} scalar unknowns",
            self.eq_constraints.len(),
            self.ineq_constraints.len(),
            self.psd_blocks.len(),
            max_block,
            self.free_scalars.len(),
            self.num_scalar_vars()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expr_merges_and_orders_terms() {
        let e = LinearExpr::from_terms([
            (VarRef::psd(0, 1, 0), 1.0),
            (VarRef::Free(2), 3.0),
            (VarRef::psd(0, 0, 1), 2.0),
            (VarRef::Free(2), -3.0),
        ]);
        assert_eq!(e.terms(), &[(VarRef::psd(0, 0, 1), 3.0)]);
        assert_eq!(e.coefficient(VarRef::Psd { block: 0, row: 0, col: 1 }), 3.0);
        assert_eq!(e.coefficient(VarRef::Free(2)), 0.0);
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let mut p = SdpProblem::new();
        let b = p.add_psd_block(2, "Q");
        p.add_eq(LinearExpr::from_terms([(VarRef::psd(b, 0, 2), 1.0)]), 1.0, "bad");
        assert!(matches!(p.validate(), Err(SdpError::DanglingReference { .. })));

        let mut p = SdpProblem::new();
        p.add_eq(LinearExpr::from_terms([(VarRef::Free(0), 1.0)]), 1.0, "bad");
        assert!(p.validate().is_err());
    }

    #[test]
    fn empty_problem_is_rejected() {
        assert!(matches!(SdpProblem::new().validate(), Err(SdpError::EmptyProblem)));
    }
}
