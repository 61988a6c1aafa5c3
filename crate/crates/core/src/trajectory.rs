//! Sampled optimal trajectories and their on-disk formats.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::semialgebraic::ControlSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    #[serde(rename = "terminal")]
    pub is_terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDatabase {
    /// Benchmark id or problem-file name the trajectories belong to.
    pub problem: String,
    pub seed: u64,
    pub samples_per_trajectory: usize,
    /// Description of the start-state region `S_D`.
    pub sample_region: String,
    /// Lagrangian the trajectories are optimal for, when known.
    #[serde(default)]
    pub intended_lagrangian: Option<String>,
    #[serde(default)]
    pub intended_value_function: Option<String>,
    pub trajectories: Vec<Vec<TrajectorySample>>,
}

const MAX_DB_BYTES: usize = 1 << 30;

impl TrajectoryDatabase {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.len() > MAX_DB_BYTES {
            return Err(CoreError::Invalid("database file too large".into()));
        }
        let db: Self = serde_json::from_str(text)?;
        db.check_shape()?;
        Ok(db)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.iter().all(Vec::is_empty)
    }

    pub fn num_samples(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = &TrajectorySample> + '_ {
        self.trajectories.iter().flatten()
    }

    pub fn terminal_samples(&self) -> impl Iterator<Item = &TrajectorySample> + '_ {
        self.samples().filter(|s| s.is_terminal)
    }

    /// Consistent dimensions and finite values throughout.
    pub fn check_shape(&self) -> Result<()> {
        let mut dims = None;
        for s in self.samples() {
            let d = (s.x.len(), s.u.len());
            if *dims.get_or_insert(d) != d {
                return Err(CoreError::Invalid("samples have inconsistent dimensions".into()));
            }
            if !s.t.is_finite() || s.x.iter().chain(&s.u).any(|v| !v.is_finite()) {
                return Err(CoreError::Invalid("non-finite sample".into()));
            }
        }
        Ok(())
    }

    /// Checks the dimensions against a system.
    pub fn check_system(&self, sys: &ControlSystem) -> Result<()> {
        self.check_shape()?;
        if let Some(s) = self.samples().next() {
            if s.x.len() != sys.space.n() || s.u.len() != sys.space.m() {
                return Err(CoreError::Dimension {
                    expected: sys.space.n() + sys.space.m(),
                    got: s.x.len() + s.u.len(),
                });
            }
        }
        Ok(())
    }

    /// One row per sample: `trajectory,k,t,x...,u...,terminal`.
    pub fn to_csv(&self) -> String {
        let (n, m) = self
            .samples()
            .next()
            .map(|s| (s.x.len(), s.u.len()))
            .unwrap_or((0, 0));
        let mut out = String::from("trajectory,k,t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for j in 1..=m {
            out.push_str(&format!(",u{j}"));
        }
        out.push_str(",terminal\n");
        for (i, traj) in self.trajectories.iter().enumerate() {
            for (k, s) in traj.iter().enumerate() {
                out.push_str(&format!("{i},{k},{:.16e}", s.t));
                for v in s.x.iter().chain(&s.u) {
                    out.push_str(&format!(",{v:.16e}"));
                }
                out.push_str(if s.is_terminal { ",1\n" } else { ",0\n" });
            }
        }
        out
    }

    /// Checks every sample invariant against `sys`; returns the violations found.
    pub fn check_invariants(&self, sys: &ControlSystem) -> InvariantReport {
        let mut report = InvariantReport::default();
        if let Err(e) = self.check_system(sys) {
            report.violations.push(e.to_string());
            return report;
        }
        let mut max_jac: f64 = 0.0;
        for s in self.samples() {
            max_jac = max_jac.max(jacobian_norm(sys, &s.x, &s.u));
        }
        for (i, traj) in self.trajectories.iter().enumerate() {
            for (k, s) in traj.iter().enumerate() {
                report.samples += 1;
                let z = sys.space.point(s.t, &s.x, &s.u);
                let vx = sys.x_set.violation_full(&z);
                let vu = sys.u_set.violation_full(&z);
                if vx > 1e-9 || vu > 1e-9 {
                    report.violations.push(format!("trajectory {i} sample {k}: (x, u) outside X x U by {:.3e}", vx.max(vu)));
                }
                if s.is_terminal {
                    let vt = sys.x_terminal.violation_full(&z);
                    if vt > 1e-6 {
                        report.violations.push(format!("trajectory {i} sample {k}: terminal state outside X_T by {vt:.3e}"));
                    }
                    if k + 1 != traj.len() {
                        report.violations.push(format!("trajectory {i}: terminal marker before the last sample"));
                    }
                }
                if k > 0 {
                    let p = &traj[k - 1];
                    let dt = s.t - p.t;
                    if dt <= 0.0 {
                        report.violations.push(format!("trajectory {i} sample {k}: time not increasing"));
                        continue;
                    }
                    let f = sys.dynamics(&p.x, &p.u);
                    let err = s
                        .x
                        .iter()
                        .zip(&p.x)
                        .zip(&f)
                        .map(|((a, b), fi)| ((a - b) / dt - fi).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let bound = 5.0 * dt * max_jac.max(1.0);
                    report.max_dynamics_ratio = report.max_dynamics_ratio.max(err / bound);
                    if err > bound {
                        report.violations.push(format!(
                            "trajectory {i} sample {k}: finite difference misses f by {err:.3e} > {bound:.3e}"
                        ));
                    }
                }
            }
            if let Some(last) = traj.last() {
                if !last.is_terminal {
                    report.unterminated += 1;
                }
            }
        }
        report
    }
}

/// Frobenius norm of `d f / d(x, u)` at a point.
fn jacobian_norm(sys: &ControlSystem, x: &[f64], u: &[f64]) -> f64 {
    let z = sys.space.point(0.0, x, u);
    let mut acc = 0.0;
    for fi in &sys.f {
        for &v in sys.space.state_vars().iter().chain(sys.space.control_vars()) {
            let d = fi.differentiate(v).expect("variable of the space").eval_unchecked(&z);
            acc += d * d;
        }
    }
    acc.sqrt()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantReport {
    pub samples: usize,
    pub unterminated: usize,
    /// Largest finite-difference error relative to its allowed bound.
    pub max_dynamics_ratio: f64,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TrajectoryDatabase {
        TrajectoryDatabase {
            problem: "exitnorm".into(),
            seed: 1,
            samples_per_trajectory: 2,
            sample_region: "B2".into(),
            intended_lagrangian: None,
            intended_value_function: None,
            trajectories: vec![vec![
                TrajectorySample {
                    t: 0.0,
                    x: vec![0.5, 0.0],
                    u: vec![0.5, 0.0],
                    is_terminal: false,
                },
                TrajectorySample {
                    t: std::f64::consts::LN_2,
                    x: vec![1.0, 0.0],
                    u: vec![1.0, 0.0],
                    is_terminal: true,
                },
            ]],
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let db = tiny();
        assert_eq!(TrajectoryDatabase::from_json(&db.to_json().unwrap()).unwrap(), db);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let csv = tiny().to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("trajectory,k,t,x1,x2,u1,u2,terminal"));
    }

    #[test]
    fn inconsistent_dimensions_are_rejected() {
        let mut db = tiny();
        db.trajectories[0][1].x.push(0.0);
        assert!(TrajectoryDatabase::from_json(&db.to_json().unwrap()).is_err());
    }
}
