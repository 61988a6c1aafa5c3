//! Solver-independent checking of a recovered `(L, phi, eps)`.
//!
//! The conditions are checked by plain evaluation: `H_f(L, phi)` on a dense
//! grid of the state-control domain, `phi(T, .)` on a grid of `X_T` and at the
//! terminal samples, the sampled integral of `H_f`, and the trace of the Gram
//! blocks.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::iocp::{sample_weights, IocpOptions, IocpSolution};
use crate::polynomial::{hjb_operator, Polynomial, VariableSpace};
use crate::semialgebraic::{BasicSemialgebraicSet, ControlSystem, Horizon};
use crate::trajectory::TrajectoryDatabase;

/// Largest tensor grid generated for a single set.
const MAX_RAW_GRID: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    /// Minimum number of grid points on the state-control domain (and on `X_T`
    /// unless the set is finite).
    pub grid_points: usize,
    /// Allowed negativity of `H_f` on the grid.
    pub tol_grid: f64,
    /// Slack on the boundary and integral conditions.
    pub tol: f64,
    pub trace_tol: f64,
    /// Must match the options used when solving.
    pub iocp: IocpOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            tol_grid: 1e-6,
            tol: 1e-6,
            trace_tol: 1e-8,
            iocp: IocpOptions::default(),
        }
    }
}

/// A candidate certificate, independent of how it was obtained.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub lagrangian: Polynomial,
    pub phi: Polynomial,
    pub epsilon: f64,
    /// `tr C_x + tr C_u` and the constant it should equal; unchecked when absent.
    pub trace: Option<(f64, f64)>,
}

impl Candidate {
    pub fn from_solution(sol: &IocpSolution, opts: &IocpOptions) -> Self {
        let trace = (!opts.drop_normalization).then(|| (sol.gram_x.trace() + sol.gram_u.trace(), sol.class.normalization));
        Self {
            lagrangian: sol.lagrangian.clone(),
            phi: sol.phi.clone(),
            epsilon: sol.epsilon,
            trace,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst value found.
    pub value: f64,
    /// Bound the value was held against.
    pub limit: f64,
    /// Where the worst value occurs, rendered with variable names.
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub domain_points: usize,
    pub terminal_points: usize,
    pub positivity_min: f64,
    pub terminal_max: f64,
    /// Smallest `phi(T, .)` on the `X_T` grid; informational only.
    pub terminal_grid_min: f64,
    pub boundary_min: f64,
    pub integral: f64,
    pub trace: Option<f64>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> + '_ {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "eps {:.6e}; {} domain points, {} terminal points",
            self.epsilon, self.domain_points, self.terminal_points
        )?;
        for c in &self.checks {
            write!(
                f,
                "  [{}] {}: {:.6e} vs {:.6e}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.limit
            )?;
            if let Some(loc) = &c.location {
                write!(f, " at ({loc})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn render(space: &VariableSpace, z: &[f64], vars: &[usize]) -> String {
    vars.iter()
        .map(|&v| format!("{}={:.6}", space.name(v), z[v]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Checks `sol` against the conditions of the inverse problem.
pub fn verify_certificate(
    sys: &ControlSystem,
    db: &TrajectoryDatabase,
    sol: &IocpSolution,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    verify_candidate(sys, db, &Candidate::from_solution(sol, &opts.iocp), opts)
}

pub fn verify_candidate(
    sys: &ControlSystem,
    db: &TrajectoryDatabase,
    cand: &Candidate,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    db.check_system(sys)?;
    let space = &sys.space;
    let dim = space.dim();
    let h = hjb_operator(&cand.lagrangian, &cand.phi, &sys.f, sys.mode())?;
    let mut checks = Vec::new();
    let all_vars: Vec<usize> = (0..dim).collect();

    // (i) H_f >= -tol on [0, T] x X x U
    let mut sets = vec![&sys.x_set, &sys.u_set];
    let time_set = sys.time_set();
    if let Some(ts) = &time_set {
        sets.insert(0, ts);
    }
    let domain = product_grid(&sets, opts.grid_points, dim);
    let (positivity_min, at) = arg_extreme(&domain, |z| h.eval_unchecked(z), false);
    checks.push(Check {
        name: "H_f >= 0 on the domain grid".into(),
        passed: positivity_min >= -opts.tol_grid,
        value: positivity_min,
        limit: -opts.tol_grid,
        location: at.map(|k| render(space, &domain[k], &all_vars)),
    });

    // (ii) phi(T, .) <= 0 on X_T, phi >= -eps at the data
    let phi_t = match (sys.horizon, space.time_var()) {
        (Horizon::FixedTime(t_end), Some(t)) => cand.phi.substitute(t, t_end),
        _ => cand.phi.clone(),
    };
    let terminal = product_grid(&[&sys.x_terminal], opts.grid_points, dim);
    let (grid_max, at_max) = arg_extreme(&terminal, |z| phi_t.eval_unchecked(z), true);
    let (terminal_grid_min, _) = arg_extreme(&terminal, |z| phi_t.eval_unchecked(z), false);
    let term_pts: Vec<Vec<f64>> = db.terminal_samples().map(|s| space.point(s.t, &s.x, &s.u)).collect();
    let (sample_max, at_sample) = arg_extreme(&term_pts, |z| phi_t.eval_unchecked(z), true);
    let state_vars = space.state_vars().to_vec();
    let (terminal_max, loc) = if sample_max > grid_max {
        (sample_max, at_sample.map(|k| format!("terminal sample {}", render(space, &term_pts[k], &state_vars))))
    } else {
        (grid_max, at_max.map(|k| render(space, &terminal[k], &state_vars)))
    };
    checks.push(Check {
        name: "phi(T, .) <= 0 on X_T".into(),
        passed: terminal_max <= opts.tol,
        value: terminal_max,
        limit: opts.tol,
        location: loc,
    });
    let bound_pts: Vec<Vec<f64>> = db
        .samples()
        .filter(|s| s.is_terminal || opts.iocp.boundary_at_all_samples)
        .map(|s| space.point(s.t, &s.x, &s.u))
        .collect();
    let (boundary_min, at_b) = arg_extreme(&bound_pts, |z| cand.phi.eval_unchecked(z), false);
    let mut time_and_state = state_vars.clone();
    if let Some(t) = space.time_var() {
        time_and_state.insert(0, t);
    }
    checks.push(Check {
        name: "phi >= -eps at terminal samples".into(),
        passed: boundary_min >= -cand.epsilon - opts.tol,
        value: boundary_min,
        limit: -cand.epsilon - opts.tol,
        location: at_b.map(|k| render(space, &bound_pts[k], &time_and_state)),
    });

    // (iii) sampled integral of H_f <= eps
    let weights = sample_weights(db, &opts.iocp);
    let integral: f64 = db
        .trajectories
        .iter()
        .zip(&weights)
        .flat_map(|(traj, w)| traj.iter().zip(w))
        .map(|(s, wk)| wk * h.eval_unchecked(&space.point(s.t, &s.x, &s.u)))
        .sum();
    checks.push(Check {
        name: "sampled integral of H_f <= eps".into(),
        passed: integral <= cand.epsilon + opts.tol,
        value: integral,
        limit: cand.epsilon + opts.tol,
        location: None,
    });

    // (iv) normalization
    if let Some((tr, c)) = cand.trace {
        checks.push(Check {
            name: "tr C_x + tr C_u = C".into(),
            passed: (tr - c).abs() <= opts.trace_tol,
            value: tr,
            limit: c,
            location: None,
        });
    }

    Ok(VerificationReport {
        epsilon: cand.epsilon,
        domain_points: domain.len(),
        terminal_points: terminal.len(),
        positivity_min,
        terminal_max,
        terminal_grid_min,
        boundary_min,
        integral,
        trace: cand.trace.map(|t| t.0),
        checks,
    })
}

/// Minimum (or maximum) of `f` over `pts` with its index; NaN counts as worst,
/// ties go to the first point.
fn arg_extreme(pts: &[Vec<f64>], f: impl Fn(&[f64]) -> f64 + Sync, max: bool) -> (f64, Option<usize>) {
    let vals: Vec<f64> = pts.par_iter().map(|z| f(z)).collect();
    let key = |v: f64| match (v.is_nan(), max) {
        (true, true) => f64::INFINITY,
        (true, false) => f64::NEG_INFINITY,
        (false, true) => v,
        (false, false) => -v,
    };
    let mut best: Option<usize> = None;
    for (k, &v) in vals.iter().enumerate() {
        if best.is_none_or(|b| key(v) > key(vals[b])) {
            best = Some(k);
        }
    }
    match best {
        Some(k) => (vals[k], Some(k)),
        None if max => (f64::NEG_INFINITY, None),
        None => (f64::INFINITY, None),
    }
}

fn linspace(r: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.0];
    }
    (0..k).map(|i| -r + 2.0 * r * i as f64 / (k - 1) as f64).collect()
}

/// Gauss-Newton projection onto the equalities of a set, in local coordinates.
struct Projector<'a> {
    set: &'a BasicSemialgebraicSet,
    jac: Vec<Vec<Polynomial>>,
    dim: usize,
}

impl<'a> Projector<'a> {
    fn new(set: &'a BasicSemialgebraicSet, dim: usize) -> Result<Self> {
        let jac = set
            .equalities
            .iter()
            .map(|h| set.variables.iter().map(|&v| h.differentiate(v)).collect())
            .collect::<Result<_>>()?;
        Ok(Self { set, jac, dim })
    }

    fn project(&self, z0: &[f64]) -> Option<Vec<f64>> {
        let n = self.set.dim();
        let m = self.set.equalities.len();
        let mut z = z0.to_vec();
        for _ in 0..60 {
            let full = self.set.embed(&z, self.dim);
            let hv = DVector::from_iterator(m, self.set.equalities.iter().map(|h| h.eval_unchecked(&full)));
            if hv.amax() <= 1e-14 {
                break;
            }
            let j = DMatrix::from_fn(m, n, |r, c| self.jac[r][c].eval_unchecked(&full));
            let jjt = &j * j.transpose() + DMatrix::identity(m, m) * 1e-15;
            let y = jjt.lu().solve(&hv)?;
            let step = j.transpose() * y;
            for (a, d) in z.iter_mut().zip(step.iter()) {
                *a -= d;
            }
            if z.iter().any(|v| !v.is_finite()) {
                return None;
            }
        }
        let full = self.set.embed(&z, self.dim);
        (self.set.violation_full(&full) <= 1e-10).then_some(z)
    }
}

/// Grid points of one set (`k` per axis on its bounding box), as full points.
fn set_grid(set: &BasicSemialgebraicSet, k: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    let d = set.dim();
    let axis = linspace(set.bounding_radius, k);
    let total = k.pow(d as u32);
    let proj = if set.equalities.is_empty() {
        None
    } else {
        Some(Projector::new(set, dim)?)
    };
    let pts: Vec<Option<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = Vec::with_capacity(d);
            for _ in 0..d {
                z.push(axis[idx % k]);
                idx /= k;
            }
            let z = match &proj {
                Some(p) => p.project(&z)?,
                None => z,
            };
            let full = set.embed(&z, dim);
            // projected points only need to be accurate, not exact
            let inside = match &proj {
                Some(_) => set.violation_full(&full) <= 1e-10,
                None => set.contains_full(&full, 0.0),
            };
            inside.then_some(full)
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in pts.into_iter().flatten() {
        if proj.is_some() {
            let key: Vec<i64> = p.iter().map(|v| (v * 1e9).round() as i64).collect();
            if !seen.insert(key) {
                continue;
            }
        }
        out.push(p);
    }
    Ok(out)
}

/// Cartesian product of per-set grids, refined until it has `target` points
/// (or the per-set grid size limit is reached).
fn product_grid(sets: &[&BasicSemialgebraicSet], target: usize, dim: usize) -> Vec<Vec<f64>> {
    let max_d = sets.iter().map(|s| s.dim()).max().unwrap_or(1).max(1) as u32;
    let mut grids: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut prev = 0usize;
    let mut k = 2usize;
    loop {
        let next: Option<Vec<Vec<Vec<f64>>>> = sets.iter().map(|s| set_grid(s, k, dim).ok()).collect();
        let Some(next) = next else {
            break;
        };
        grids = next;
        let count = grids.iter().map(Vec::len).fold(1usize, |a, b| a.saturating_mul(b));
        // a finite set stops growing once every point has been found
        if count >= target || (count == prev && k > 8) {
            break;
        }
        prev = count;
        let k_next = (k + 1).max(k * 5 / 4);
        if k_next.saturating_pow(max_d) > MAX_RAW_GRID {
            break;
        }
        k = k_next;
    }
    let mut out = vec![vec![0.0; dim]];
    for g in &grids {
        let mut next = Vec::with_capacity(out.len() * g.len());
        for base in &out {
            for p in g {
                next.push(base.iter().zip(p).map(|(a, b)| a + b).collect());
            }
        }
        out = next;
    }
    out
}
