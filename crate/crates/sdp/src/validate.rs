//! Independent check of a returned solution against the original problem data.

use std::fmt;

use crate::cone::min_sym_eigenvalue;
use crate::problem::SdpProblem;
use crate::solver::{SdpSolution, SolveStatus};

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub has_primal: bool,
    pub max_eq_residual: f64,
    /// Largest positive part of `row(x) - rhs` over inequality rows.
    pub max_ineq_violation: f64,
    pub block_min_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    /// `max(eq residual, ineq violation, -min eigenvalue, 0)`
    pub max_violation: f64,
    pub objective: f64,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_feasible(&self, feas_tol: f64, eig_tol: f64) -> bool {
        self.has_primal
            && self.max_eq_residual <= feas_tol
            && self.max_ineq_violation <= feas_tol
            && self.min_eigenvalue >= -eig_tol
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.has_primal {
            writeln!(f, "no primal certificate available")?;
        } else {
            writeln!(f, "objective          {:.10e}", self.objective)?;
            writeln!(f, "max eq residual    {:.3e}", self.max_eq_residual)?;
            writeln!(f, "max ineq violation {:.3e}", self.max_ineq_violation)?;
            writeln!(f, "min eigenvalue     {:.3e}", self.min_eigenvalue)?;
            writeln!(f, "max violation      {:.3e}", self.max_violation)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Recomputes residuals and block eigenvalues of `sol` on `problem`.
pub fn validate_solution(problem: &SdpProblem, sol: &SdpSolution) -> ValidationReport {
    let mut notes = Vec::new();
    let shapes_ok = sol.psd.len() == problem.psd_blocks.len()
        && sol
            .psd
            .iter()
            .zip(&problem.psd_blocks)
            .all(|(m, b)| m.nrows() == b.size && m.ncols() == b.size)
        && sol.free.len() == problem.free_scalars.len();
    if sol.status == SolveStatus::Infeasible {
        notes.push("solver reported infeasibility; there is no primal certificate".to_string());
    }
    if !shapes_ok {
        if sol.status != SolveStatus::Infeasible {
            notes.push("solution shape does not match the problem".to_string());
        }
        return ValidationReport {
            has_primal: false,
            max_eq_residual: f64::INFINITY,
            max_ineq_violation: f64::INFINITY,
            block_min_eigenvalues: Vec::new(),
            min_eigenvalue: f64::NEG_INFINITY,
            max_violation: f64::INFINITY,
            objective: f64::NAN,
            notes,
        };
    }
    let max_eq_residual = problem
        .eq_constraints
        .iter()
        .map(|r| (sol.eval(&r.expr) - r.rhs).abs())
        .fold(0.0, f64::max);
    let max_ineq_violation = problem
        .ineq_constraints
        .iter()
        .map(|r| (sol.eval(&r.expr) - r.rhs).max(0.0))
        .fold(0.0, f64::max);
    let block_min_eigenvalues: Vec<f64> = sol.psd.iter().map(min_sym_eigenvalue).collect();
    let min_eigenvalue = block_min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    for (k, e) in block_min_eigenvalues.iter().enumerate() {
        if *e < 0.0 {
            notes.push(format!(
                "block {k} ({}) has minimum eigenvalue {e:.6e}",
                problem.psd_blocks[k].label
            ));
        }
    }
    let max_violation = max_eq_residual
        .max(max_ineq_violation)
        .max(if min_eigenvalue.is_finite() { -min_eigenvalue } else { 0.0 })
        .max(0.0);
    ValidationReport {
        has_primal: true,
        max_eq_residual,
        max_ineq_violation,
        block_min_eigenvalues,
        min_eigenvalue,
        max_violation,
        objective: sol.eval(&problem.objective),
        notes,
    }
}
