//! Result bundles: the JSON record of one solve and its CSV summary row.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bench::Region;
use crate::compare::SimilarityReport;
use crate::error::{CoreError, Result};
use crate::iocp::{IocpOptions, IocpSolution, LagrangianClass};
use crate::polynomial::{Polynomial, VariableSpace};
use crate::semialgebraic::{ControlSystem, ProblemFile};
use crate::verify::{Candidate, VerificationReport};

pub const BUNDLE_FORMAT: u32 = 1;
const MAX_BUNDLE_BYTES: usize = 256 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub monomial: String,
    pub coefficient: f64,
}

fn terms_of(p: &Polynomial) -> Vec<Term> {
    p.terms()
        .map(|(m, c)| Term {
            monomial: m.render(p.space()),
            coefficient: c,
        })
        .collect()
}

fn poly_of(space: &std::sync::Arc<VariableSpace>, terms: &[Term]) -> Result<Polynomial> {
    let mut out = Polynomial::zero(space);
    for t in terms {
        let m = Polynomial::parse(space, &t.monomial)?;
        let single = m.num_terms() == 1 && m.terms().all(|(_, c)| c == 1.0);
        if !single || !t.coefficient.is_finite() {
            return Err(CoreError::Invalid(format!("bad term `{}`", t.monomial)));
        }
        out = out.add(&m.scale(t.coefficient))?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixNorms {
    pub frobenius: f64,
    pub spectral: f64,
}

impl MatrixNorms {
    pub fn of(m: &DMatrix<f64>) -> Self {
        let spectral = if m.is_empty() {
            0.0
        } else {
            m.clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        };
        Self {
            frobenius: m.norm(),
            spectral,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSummary {
    pub status: String,
    pub iterations: usize,
    pub rows: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub max_violation: f64,
}

/// Everything needed to inspect or re-verify one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultBundle {
    pub format: u32,
    pub problem: String,
    pub system: ProblemFile,
    pub seed: u64,
    pub trajectories: usize,
    pub samples_per_trajectory: usize,
    pub sample_region: String,
    /// Start-state region when the database came from a built-in generator.
    #[serde(default)]
    pub region: Option<Region>,
    pub class: LagrangianClass,
    pub deg_phi: u32,
    pub half_degree: u32,
    pub options: IocpOptions,
    pub status: String,
    pub epsilon: f64,
    pub lagrangian: Vec<Term>,
    pub phi: Vec<Term>,
    pub gram_x: Vec<Vec<f64>>,
    pub gram_u: Vec<Vec<f64>>,
    pub gram_x_norms: MatrixNorms,
    pub gram_u_norms: MatrixNorms,
    pub solver: SolverSummary,
    /// Weighted integral of `H_f` per trajectory; the constraint uses their sum.
    pub trajectory_integrals: Vec<f64>,
    pub notes: Vec<String>,
    #[serde(default)]
    pub target_lagrangian: Option<String>,
    #[serde(default)]
    pub similarity: Option<SimilarityReport>,
    #[serde(default)]
    pub verification: Option<VerificationReport>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CoreError::Invalid("Gram matrix is not square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ResultBundle {
    pub fn new(
        problem: &str,
        sys: &ControlSystem,
        db: &crate::trajectory::TrajectoryDatabase,
        sol: &IocpSolution,
        options: &IocpOptions,
    ) -> Self {
        Self {
            format: BUNDLE_FORMAT,
            problem: problem.to_string(),
            system: sys.to_file(),
            seed: db.seed,
            trajectories: db.trajectories.len(),
            samples_per_trajectory: db.samples_per_trajectory,
            sample_region: db.sample_region.clone(),
            region: None,
            class: sol.class,
            deg_phi: sol.deg_phi,
            half_degree: sol.half_degree,
            options: options.clone(),
            status: sol.status.to_string(),
            epsilon: sol.epsilon,
            lagrangian: terms_of(&sol.lagrangian),
            phi: terms_of(&sol.phi),
            gram_x: rows(&sol.gram_x),
            gram_u: rows(&sol.gram_u),
            gram_x_norms: MatrixNorms::of(&sol.gram_x),
            gram_u_norms: MatrixNorms::of(&sol.gram_u),
            solver: SolverSummary {
                status: sol.sdp.status.to_string(),
                iterations: sol.sdp.iterations,
                rows: sol.sdp_rows,
                primal_objective: sol.sdp.primal_objective,
                dual_objective: sol.sdp.dual_objective,
                duality_gap: sol.sdp.duality_gap,
                max_violation: sol.sdp.max_violation,
            },
            trajectory_integrals: sol.trajectory_integrals.clone(),
            notes: sol.notes.clone(),
            target_lagrangian: None,
            similarity: None,
            verification: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        if text.len() > MAX_BUNDLE_BYTES {
            return Err(CoreError::Invalid("bundle file too large".into()));
        }
        let b: Self = serde_json::from_str(text)?;
        if b.format != BUNDLE_FORMAT {
            return Err(CoreError::Invalid(format!("unsupported bundle format {}", b.format)));
        }
        Ok(b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Rebuilds the system and the certificate for re-verification.
    pub fn candidate(&self) -> Result<(ControlSystem, Candidate)> {
        let sys = self.system.build()?;
        let gx = matrix(&self.gram_x)?;
        let gu = matrix(&self.gram_u)?;
        let trace = (!self.options.drop_normalization).then(|| (gx.trace() + gu.trace(), self.class.normalization));
        let cand = Candidate {
            lagrangian: poly_of(&sys.space, &self.lagrangian)?,
            phi: poly_of(&sys.space, &self.phi)?,
            epsilon: self.epsilon,
            trace,
        };
        Ok((sys, cand))
    }

    pub fn lagrangian_text(&self) -> String {
        self.system
            .build()
            .and_then(|sys| poly_of(&sys.space, &self.lagrangian))
            .map(|p| p.to_string())
            .unwrap_or_default()
    }

    pub const CSV_HEADER: &'static str = "problem,region,trajectories,samples,seed,a,b,deg_phi,half_degree,status,epsilon,similarity,verified,rows,iterations,lagrangian";

    /// One summary line (no trailing newline), floats with 17 significant digits.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.16e},{},{},{},{},\"{}\"",
            self.problem,
            self.sample_region,
            self.trajectories,
            self.samples_per_trajectory,
            self.seed,
            self.class.a,
            self.class.b,
            self.deg_phi,
            self.half_degree,
            self.status,
            self.epsilon,
            opt(self.similarity.as_ref().map(|s| s.similarity)),
            self.verification.as_ref().map(|v| v.passed().to_string()).unwrap_or_default(),
            self.solver.rows,
            self.solver.iterations,
            self.lagrangian_text().replace('"', "\"\""),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_exitnorm, Benchmark};
    use crate::iocp::solve_iocp;

    #[test]
    fn bundle_round_trips_and_rebuilds_the_certificate() {
        let sys = Benchmark::ExitNorm.system();
        let db = gen_exitnorm(40, 10, 9);
        let opts = IocpOptions::default();
        let sol = solve_iocp(&sys, &db, LagrangianClass::new(1, 1), 2, &opts).unwrap();
        let b = ResultBundle::new("exitnorm", &sys, &db, &sol, &opts);
        let text = b.to_json().unwrap();
        let back = ResultBundle::from_json(&text).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_json().unwrap(), text);
        let (_, cand) = back.candidate().unwrap();
        assert_eq!(cand.lagrangian, sol.lagrangian);
        assert_eq!(cand.phi, sol.phi);
        assert!(b.csv_row().split(',').count() >= ResultBundle::CSV_HEADER.split(',').count());
    }

    #[test]
    fn norms_of_a_diagonal_matrix() {
        let n = MatrixNorms::of(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -4.0])));
        assert!((n.frobenius - 5.0).abs() < 1e-15);
        assert!((n.spectral - 4.0).abs() < 1e-12);
    }

    #[test]
    fn foreign_format_is_rejected() {
        assert!(ResultBundle::from_json("{\"format\": 7}").is_err());
        assert!(ResultBundle::from_json("[]").is_err());
    }
}
