//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! The problem in [`SdpProblem`] form is passed to the solver through its
//! Lagrangian dual written as a conic LP with free variables:
//!
//! ```text
//! minimize   -b . y
//! subject to sum_i y_i A_i + S = C     S in K   (K = R^l_+ x PSD blocks)
//!            F^T y = c_f
//! ```
//!
//! whose dual variables are the primal cone variables `X` (and inequality
//! slacks) and the free scalars `v`. Each iteration solves one Nesterov-Todd
//! scaled Newton system reduced to the saddle form
//! `[M F; F^T 0]` with the Schur complement `M_ij = <A_i, W^-1 A_j W^-1>`.
//! Infeasibility is read off the embedding variables `tau`/`kappa`.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{jordan_product, ConeDims, ConeVec, Scaling};
use crate::error::Result;
use crate::problem::{LinearExpr, SdpProblem, VarRef};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Duality gap tolerance, relative to `max(1, |primal obj|, |dual obj|)`.
    pub gap_tol: f64,
    /// Primal and dual residual tolerance (relative to the data norms).
    pub feas_tol: f64,
    /// Slack allowed below zero on PSD eigenvalues when validating.
    pub eig_tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the cone boundary taken per iteration.
    pub step_fraction: f64,
    /// Looser tolerance accepted, as `near_optimal`, when progress stalls.
    pub near_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            eig_tol: 1e-9,
            max_iter: 200,
            step_fraction: 0.99,
            near_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    /// Stalled before `feas_tol`/`gap_tol` but within `near_tol`.
    NearOptimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near_optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }

    /// Optimal or near optimal: the iterate is a usable solution.
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => SolveStatus::Optimal,
            "near_optimal" => SolveStatus::NearOptimal,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "max_iter" => SolveStatus::MaxIter,
            "numerical_failure" => SolveStatus::NumericalFailure,
            _ => return None,
        })
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub step: f64,
    pub tau: f64,
    pub kappa: f64,
}

/// Renders the iteration log as plain text, one line per iteration.
pub fn format_log(log: &[IterationRecord]) -> String {
    let mut out = String::from(
        " iter      primal obj        dual obj        gap     p.res     d.res     step       tau     kappa\n",
    );
    for r in log {
        out.push_str(&format!(
            "{:5} {:15.8e} {:15.8e} {:10.3e} {:9.2e} {:9.2e} {:8.4} {:9.2e} {:9.2e}\n",
            r.iter, r.primal_obj, r.dual_obj, r.gap, r.primal_res, r.dual_res, r.step, r.tau, r.kappa
        ));
    }
    out
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Primal PSD blocks `X_b` (empty when no primal iterate is meaningful).
    pub psd: Vec<DMatrix<f64>>,
    pub free: Vec<f64>,
    /// Slacks `b_i - row_i(x)` of the inequality rows.
    pub ineq_slack: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    /// Dual slack matrices `C_b - sum_i y_i A_i`.
    pub dual_slack: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    /// Largest primal violation: row residuals and negative PSD eigenvalues.
    pub max_violation: f64,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
}

impl SdpSolution {
    pub fn value(&self, var: VarRef) -> f64 {
        match var {
            VarRef::Free(k) => self.free.get(k).copied().unwrap_or(0.0),
            VarRef::Psd { block, row, col } => self
                .psd
                .get(block)
                .map(|m| m[(row, col)])
                .unwrap_or(0.0),
        }
    }

    pub fn eval(&self, expr: &LinearExpr) -> f64 {
        expr.terms().iter().map(|&(v, c)| c * self.value(v)).sum()
    }
}

// ---------------------------------------------------------------------------
// internal standard form

type PsdEntry = (usize, usize, f64);

struct Standard {
    dims: ConeDims,
    m: usize,
    nf: usize,
    n_eq: usize,
    row_lp: Vec<Option<(usize, f64)>>,
    row_psd: Vec<Vec<(usize, usize, usize, f64)>>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    c_cone: ConeVec,
    c_free: Vec<f64>,
    /// `F^T`, shape `nf x m`.
    a_free: DMatrix<f64>,
    /// Per PSD block: the rows touching it with their entries, sorted by row.
    block_rows: Vec<Vec<(usize, Vec<PsdEntry>)>>,
    /// Per row: `(block, position in block_rows[block])`.
    row_block_pos: Vec<Vec<(usize, usize)>>,
}

impl Standard {
    fn new(p: &SdpProblem) -> Self {
        let n_eq = p.eq_constraints.len();
        let n_ineq = p.ineq_constraints.len();
        let m = n_eq + n_ineq;
        let nf = p.free_scalars.len();
        let dims = ConeDims {
            lp: n_ineq,
            psd: p.psd_blocks.iter().map(|b| b.size).collect(),
        };
        let mut row_lp = vec![None; m];
        let mut row_psd = vec![Vec::new(); m];
        let mut b = vec![0.0; m];
        let mut row_scale = vec![1.0; m];
        let mut a_free = DMatrix::zeros(nf, m);
        let rows = p.eq_constraints.iter().chain(p.ineq_constraints.iter());
        for (i, row) in rows.enumerate() {
            let mut scale = row
                .expr
                .terms()
                .iter()
                .map(|(_, c)| c.abs())
                .fold(0.0, f64::max);
            if i >= n_eq {
                // the slack enters with coefficient 1
                scale = scale.max(1.0);
            }
            let sc = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            row_scale[i] = sc;
            b[i] = row.rhs * sc;
            if i >= n_eq {
                row_lp[i] = Some((i - n_eq, sc));
            }
            for &(var, coef) in row.expr.terms() {
                match var {
                    VarRef::Free(k) => a_free[(k, i)] += coef * sc,
                    VarRef::Psd { block, row, col } => row_psd[i].push((block, row, col, coef * sc)),
                }
            }
        }
        let mut c_cone = ConeVec::zeros(&dims);
        let mut c_free = vec![0.0; nf];
        for &(var, coef) in p.objective.terms() {
            match var {
                VarRef::Free(k) => c_free[k] += coef,
                VarRef::Psd { block, row, col } => {
                    if row == col {
                        c_cone.psd[block][(row, row)] += coef;
                    } else {
                        c_cone.psd[block][(row, col)] += 0.5 * coef;
                        c_cone.psd[block][(col, row)] += 0.5 * coef;
                    }
                }
            }
        }
        let mut block_rows: Vec<Vec<(usize, Vec<PsdEntry>)>> = vec![Vec::new(); dims.psd.len()];
        let mut row_block_pos = vec![Vec::new(); m];
        for (i, entries) in row_psd.iter().enumerate() {
            let mut per_block: Vec<(usize, Vec<PsdEntry>)> = Vec::new();
            for &(blk, r, c, a) in entries {
                match per_block.iter_mut().find(|(bb, _)| *bb == blk) {
                    Some((_, list)) => list.push((r, c, a)),
                    None => per_block.push((blk, vec![(r, c, a)])),
                }
            }
            per_block.sort_by_key(|(bb, _)| *bb);
            for (blk, list) in per_block {
                row_block_pos[i].push((blk, block_rows[blk].len()));
                block_rows[blk].push((i, list));
            }
        }
        Self {
            dims,
            m,
            nf,
            n_eq,
            row_lp,
            row_psd,
            b,
            row_scale,
            c_cone,
            c_free,
            a_free,
            block_rows,
            row_block_pos,
        }
    }

    /// `G x = sum_i x_i A_i`
    fn g_apply(&self, x: &[f64]) -> ConeVec {
        let mut out = ConeVec::zeros(&self.dims);
        for i in 0..self.m {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            if let Some((k, a)) = self.row_lp[i] {
                out.lp[k] += a * xi;
            }
            for &(blk, r, c, a) in &self.row_psd[i] {
                let mat = &mut out.psd[blk];
                if r == c {
                    mat[(r, r)] += a * xi;
                } else {
                    let h = 0.5 * a * xi;
                    mat[(r, c)] += h;
                    mat[(c, r)] += h;
                }
            }
        }
        out
    }

    /// `(G^T z)_i = <A_i, z>`
    fn gt_apply(&self, z: &ConeVec) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let mut acc = 0.0;
                if let Some((k, a)) = self.row_lp[i] {
                    acc += a * z.lp[k];
                }
                for &(blk, r, c, a) in &self.row_psd[i] {
                    acc += a * z.psd[blk][(r, c)];
                }
                acc
            })
            .collect()
    }

    fn free_apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.a_free * DVector::from_column_slice(x)).data.into()
    }

    fn free_apply_t(&self, y: &[f64]) -> Vec<f64> {
        (self.a_free.transpose() * DVector::from_column_slice(y)).data.into()
    }

    /// Schur complement `M = G^T (W^T W)^{-1} G`.
    fn schur(&self, sc: &Scaling) -> DMatrix<f64> {
        let m = self.m;
        let winv: Vec<(usize, Vec<f64>)> = sc
            .psd
            .iter()
            .map(|b| {
                let n = b.winv.nrows();
                // row-major copy for the inner loops
                (n, b.winv.transpose().as_slice().to_vec())
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut out = vec![0.0; m];
                if let Some((k, a)) = self.row_lp[i] {
                    let d = sc.lp[k];
                    out[i] += a * a / (d * d);
                }
                for &(blk, pos) in &self.row_block_pos[i] {
                    let (n, w) = &winv[blk];
                    let list = &self.block_rows[blk];
                    let ei = &list[pos].1;
                    for (j, ej) in &list[pos..] {
                        let mut acc = 0.0;
                        for &(r, c, a) in ei {
                            let wr = &w[r * n..(r + 1) * n];
                            let wc = &w[c * n..(c + 1) * n];
                            let mut inner = 0.0;
                            for &(p, q, a2) in ej {
                                inner += a2 * (wr[p] * wc[q] + wr[q] * wc[p]);
                            }
                            acc += a * inner;
                        }
                        out[*j] += 0.5 * acc;
                    }
                }
                out
            })
            .collect();
        let mut mat = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for j in i..m {
                let v = row[j];
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        mat
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

fn cholesky_regularized(mut mat: DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = mat.nrows();
    let maxdiag = (0..n).map(|k| mat[(k, k)].abs()).fold(1e-300, f64::max);
    let mut delta = 1e-14 * maxdiag;
    for _ in 0..7 {
        for k in 0..n {
            mat[(k, k)] += delta;
        }
        if let Some(ch) = mat.clone().cholesky() {
            return Some((ch, delta));
        }
        for k in 0..n {
            mat[(k, k)] -= delta;
        }
        delta *= 100.0;
    }
    None
}

/// Factored reduced KKT system for one scaling.
struct Kkt<'a> {
    std: &'a Standard,
    scaling: &'a Scaling,
    m_exact: DMatrix<f64>,
    chol_m: Cholesky<f64, Dyn>,
    minv_at: DMatrix<f64>,
    chol_s: Option<Cholesky<f64, Dyn>>,
}

impl<'a> Kkt<'a> {
    fn factor(std: &'a Standard, scaling: &'a Scaling) -> Option<Self> {
        let m_exact = std.schur(scaling);
        let (chol_m, _) = cholesky_regularized(m_exact.clone())?;
        let (minv_at, chol_s) = if std.nf > 0 {
            let minv_at = chol_m.solve(&std.a_free.transpose());
            let s = &std.a_free * &minv_at;
            let maxdiag = (0..std.nf).map(|k| s[(k, k)].abs()).fold(0.0, f64::max);
            let mut delta = 1e-13 * (1.0 + maxdiag);
            let mut chol = None;
            for _ in 0..7 {
                let mut sr = s.clone();
                for k in 0..std.nf {
                    sr[(k, k)] += delta;
                }
                if let Some(ch) = sr.cholesky() {
                    chol = Some(ch);
                    break;
                }
                delta *= 100.0;
            }
            (minv_at, Some(chol?))
        } else {
            (DMatrix::zeros(std.m, 0), None)
        };
        Some(Self {
            std,
            scaling,
            m_exact,
            chol_m,
            minv_at,
            chol_s,
        })
    }

    /// Solves `[M F; F^T 0][ux; uy] = [r1; r2]` with the regularized factors.
    fn solve_reduced(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.chol_m.solve(&DVector::from_column_slice(r1));
        match &self.chol_s {
            None => (t.data.into(), Vec::new()),
            Some(chol_s) => {
                let at = &self.std.a_free * &t - DVector::from_column_slice(r2);
                let uy = chol_s.solve(&at);
                let ux = t - &self.minv_at * &uy;
                (ux.data.into(), uy.data.into())
            }
        }
    }

    /// Solves `A^T uy + G^T uz = bx, A ux = by, G ux - W^T W uz = bz` and
    /// returns `(ux, uy, W uz)`. Working with `W uz` and `W^{-T} bz` keeps the
    /// third block accurate when `W` is badly conditioned.
    fn solve(&self, bx: &[f64], by: &[f64], bz: &ConeVec) -> (Vec<f64>, Vec<f64>, ConeVec) {
        self.solve_scaled(bx, by, &self.scaling.apply_wt_inv(bz))
    }

    /// As [`Kkt::solve`] with the third right-hand side given as `W^{-T} bz`.
    fn solve_scaled(&self, bx: &[f64], by: &[f64], bzt: &ConeVec) -> (Vec<f64>, Vec<f64>, ConeVec) {
        let std = self.std;
        let (mut ux, mut uy, mut wuz) = self.solve_once(bx, by, bzt);
        for _ in 0..2 {
            let uz = self.scaling.apply_winv(&wuz);
            let mut rx = bx.to_vec();
            axpy(&mut rx, -1.0, &std.gt_apply(&uz));
            if std.nf > 0 {
                axpy(&mut rx, -1.0, &std.free_apply_t(&uy));
            }
            let mut ry = by.to_vec();
            axpy(&mut ry, -1.0, &std.free_apply(&ux));
            let mut rz = bzt.clone();
            rz.axpy(-1.0, &self.scaling.apply_wt_inv(&std.g_apply(&ux)));
            rz.axpy(1.0, &wuz);
            let (dx, dy, dz) = self.solve_once(&rx, &ry, &rz);
            axpy(&mut ux, 1.0, &dx);
            axpy(&mut uy, 1.0, &dy);
            wuz.axpy(1.0, &dz);
        }
        (ux, uy, wuz)
    }

    fn solve_once(&self, bx: &[f64], by: &[f64], bzt: &ConeVec) -> (Vec<f64>, Vec<f64>, ConeVec) {
        let std = self.std;
        let mut r1 = std.gt_apply(&self.scaling.apply_winv(bzt));
        axpy(&mut r1, 1.0, bx);
        let r2 = by.to_vec();
        let (mut ux, mut uy) = self.solve_reduced(&r1, &r2);
        for _ in 0..3 {
            let mux = &self.m_exact * DVector::from_column_slice(&ux);
            let mut res1: Vec<f64> = r1.iter().zip(mux.iter()).map(|(a, b)| a - b).collect();
            if std.nf > 0 {
                axpy(&mut res1, -1.0, &std.free_apply_t(&uy));
            }
            let aux = std.free_apply(&ux);
            let res2: Vec<f64> = r2.iter().zip(&aux).map(|(a, b)| a - b).collect();
            let scale = norm(&r1).max(norm(&r2)).max(1e-300);
            if norm(&res1).max(norm(&res2)) <= 1e-15 * scale {
                break;
            }
            let (dx, dy) = self.solve_reduced(&res1, &res2);
            axpy(&mut ux, 1.0, &dx);
            axpy(&mut uy, 1.0, &dy);
        }
        let mut wuz = self.scaling.apply_wt_inv(&std.g_apply(&ux));
        wuz.axpy(-1.0, bzt);
        (ux, uy, wuz)
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: ConeVec,
    s: ConeVec,
    tau: f64,
    kappa: f64,
}

/// Solves `problem`; invalid input is an error, non-convergence a status.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let started = Instant::now();
    let std = Standard::new(problem);
    let mut log = Vec::new();
    let (status, it) = run(&std, opts, &mut log);
    log::debug!(
        "sdp solve: {} rows, {} free, status {status} after {} iterations in {:.2?}",
        std.m,
        std.nf,
        log.len(),
        started.elapsed()
    );
    Ok(extract(problem, &std, status, it, log))
}

fn run(std: &Standard, opts: &SolverOptions, log: &mut Vec<IterationRecord>) -> (SolveStatus, Iterate) {
    let dims = &std.dims;
    let degree = dims.degree() as f64;
    let neg_c = std.b.clone(); // -c in the solver's objective
    let c: Vec<f64> = std.b.iter().map(|v| -v).collect();
    let h = &std.c_cone;
    let bf = &std.c_free;

    let resx0 = norm(&std.b).max(1.0);
    let resy0 = norm(bf).max(1.0);
    let resz0 = h.norm().max(1.0);

    // starting point from two least-squares problems with identity scaling
    let ident = Scaling::identity(dims);
    let Some(kkt0) = Kkt::factor(std, &ident) else {
        return (SolveStatus::NumericalFailure, trivial_iterate(std));
    };
    let zero_m = vec![0.0; std.m];
    let zero_f = vec![0.0; std.nf];
    let (x, _, zp) = kkt0.solve(&zero_m, bf, h);
    let mut s = zp;
    s.scale(-1.0);
    let (_, y, mut z) = kkt0.solve(&neg_c, &zero_f, &ConeVec::zeros(dims));
    drop(kkt0);
    for v in [&mut s, &mut z] {
        v.symmetrize();
        let t = -v.min_eigenvalue();
        if t.is_finite() && t >= -1e-8 * v.norm().max(1.0) {
            v.add_identity(1.0 + t);
        }
    }
    let mut it = Iterate {
        x,
        y,
        z,
        s,
        tau: 1.0,
        kappa: 1.0,
    };

    let Some((mut w, mut lambda)) = Scaling::nesterov_todd(&it.s, &it.z) else {
        return (SolveStatus::NumericalFailure, it);
    };
    let mut last_step = 0.0;
    let mut best: Option<(f64, Iterate)> = None;
    // last iteration at which the best score halved
    let mut last_gain = 0usize;
    let mut gain_ref = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        // residuals of the embedding
        let gtz = std.gt_apply(&it.z);
        let aty = std.free_apply_t(&it.y);
        let hrx: Vec<f64> = gtz.iter().zip(&aty).map(|(a, b)| a + b).collect();
        let mut rx = hrx.clone();
        axpy(&mut rx, it.tau, &c);
        let ax = std.free_apply(&it.x);
        let mut ry: Vec<f64> = ax.iter().map(|v| -v).collect();
        axpy(&mut ry, it.tau, bf);
        let gx = std.g_apply(&it.x);
        let mut hrz = it.s.clone();
        hrz.axpy(1.0, &gx);
        let mut rz = hrz.clone();
        rz.axpy(-it.tau, h);
        let cx = dot(&c, &it.x);
        let by = dot(bf, &it.y);
        let hz = h.dot(&it.z);
        let rt = it.kappa + cx + by + hz;
        let gap = it.s.dot(&it.z);
        let mu = (gap + it.tau * it.kappa) / (degree + 1.0);

        let primal_obj = (hz + by) / it.tau;
        let dual_obj = -cx / it.tau;
        let primal_res = norm(&rx) / it.tau / resx0;
        let dual_res = (norm(&ry) / it.tau / resy0).max(rz.norm() / it.tau / resz0);
        let gap_t = gap / (it.tau * it.tau);

        log.push(IterationRecord {
            iter,
            primal_obj,
            dual_obj,
            gap: gap_t,
            primal_res,
            dual_res,
            step: last_step,
            tau: it.tau,
            kappa: it.kappa,
        });
        log::trace!(
            "{iter:3} pobj {primal_obj:.6e} dobj {dual_obj:.6e} gap {gap_t:.2e} pres {primal_res:.2e} dres {dual_res:.2e}"
        );

        let obj_scale = 1.0f64.max(primal_obj.abs()).max(dual_obj.abs());
        if primal_res <= opts.feas_tol && dual_res <= opts.feas_tol && gap_t <= opts.gap_tol * obj_scale {
            return (SolveStatus::Optimal, it);
        }
        let score = primal_res.max(dual_res).max(gap_t / obj_scale);
        if score.is_finite() && best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, it.clone()));
        }
        if score < 0.5 * gain_ref {
            gain_ref = score;
            last_gain = iter;
        }
        if gain_ref <= opts.near_tol && iter >= last_gain + STALL_WINDOW {
            return stalled(SolveStatus::MaxIter, it, best, opts);
        }
        // Farkas certificate for the primal: b.y > 0, F^T y = 0, -sum y_i A_i in K
        if cx < 0.0 {
            let dinf = (norm(&ax) / resy0).max(hrz.norm() / resz0) / (-cx);
            if dinf <= opts.feas_tol {
                return (SolveStatus::Infeasible, it);
            }
        }
        // improving primal ray
        if hz + by < 0.0 {
            let pinf = norm(&hrx) / resx0 / (-(hz + by));
            if pinf <= opts.feas_tol {
                return (SolveStatus::Unbounded, it);
            }
        }
        if iter == opts.max_iter {
            return stalled(SolveStatus::MaxIter, it, best, opts);
        }

        let Some(kkt) = Kkt::factor(std, &w) else {
            return stalled(SolveStatus::NumericalFailure, it, best, opts);
        };
        // direction multiplying d tau
        // h . z = (W^{-T} h) . (W z)
        let ht = w.apply_wt_inv(h);
        let (x1, y1, z1) = kkt.solve(&neg_c, bf, h);
        let denom_1 = dot(&c, &x1) + dot(bf, &y1) + ht.dot(&z1);

        let lambda_sq = lambda.square();
        let mut sigma = 0.0;
        let mut corr: Option<(ConeVec, f64)> = None;
        let mut chosen = None;
        for phase in 0..2 {
            let eta = if phase == 0 { 0.0 } else { sigma };
            let mut target = lambda_sq.clone();
            target.scale(-1.0);
            target.add_identity(sigma * mu);
            let mut dkc = -it.tau * it.kappa + sigma * mu;
            if let Some((cs, ct)) = &corr {
                target.axpy(-1.0, cs);
                dkc -= ct;
            }
            let dsc = lambda.jordan_solve(&target);
            let bx: Vec<f64> = rx.iter().map(|v| -(1.0 - eta) * v).collect();
            let byv: Vec<f64> = ry.iter().map(|v| (1.0 - eta) * v).collect();
            // W^{-T} (-W^T dsc - (1 - eta) rz)
            let mut bzt = dsc.clone();
            bzt.scale(-1.0);
            bzt.axpy(-(1.0 - eta), &w.apply_wt_inv(&rz));
            let (x0, y0, z0) = kkt.solve_scaled(&bx, &byv, &bzt);
            let num = -(1.0 - eta) * rt - dkc / it.tau - (dot(&c, &x0) + dot(bf, &y0) + ht.dot(&z0));
            let den = denom_1 - it.kappa / it.tau;
            let dtau = num / den;
            let mut dx = x0;
            axpy(&mut dx, dtau, &x1);
            let mut dy = y0;
            axpy(&mut dy, dtau, &y1);
            let mut dzw = z0;
            dzw.axpy(dtau, &z1);
            let dkappa = (dkc - it.kappa * dtau) / it.tau;
            let mut dsw = dsc;
            dsw.axpy(-1.0, &dzw);

            let mut amax = lambda.max_step(&dsw).min(lambda.max_step(&dzw));
            if dtau < 0.0 {
                amax = amax.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                amax = amax.min(-it.kappa / dkappa);
            }
            if amax.is_nan() {
                return stalled(SolveStatus::NumericalFailure, it, best, opts);
            }
            if phase == 0 {
                let step = amax.min(1.0);
                sigma = (1.0 - step).powi(3);
                corr = Some((jordan_product(&dsw, &dzw), dtau * dkappa));
            } else {
                let step = (opts.step_fraction * amax).min(1.0);
                chosen = Some((step, dx, dy, dsw, dzw, dtau, dkappa));
            }
        }
        let (step, dx, dy, dsw, dzw, dtau, dkappa) = chosen.expect("corrector phase ran");
        if !(step > 1e-12) {
            return stalled(SolveStatus::NumericalFailure, it, best, opts);
        }
        // s and z move additively so the residuals contract with the step
        it.s.axpy(step, &w.apply_wt(&dsw));
        it.z.axpy(step, &w.apply_winv(&dzw));
        let Some((w_next, lambda_next)) = w.update(&lambda, &dsw, &dzw, step) else {
            return stalled(SolveStatus::NumericalFailure, it, best, opts);
        };
        w = w_next;
        lambda = lambda_next;
        axpy(&mut it.x, step, &dx);
        axpy(&mut it.y, step, &dy);
        it.tau += step * dtau;
        it.kappa += step * dkappa;
        last_step = step;
        if !it.z.is_finite() || !it.s.is_finite() || !it.tau.is_finite() {
            return stalled(SolveStatus::NumericalFailure, it, best, opts);
        }
    }
    stalled(SolveStatus::MaxIter, it, best, opts)
}

/// Iterations without halving the best score before giving up once within `near_tol`.
const STALL_WINDOW: usize = 12;

/// Falls back to the best iterate seen when it meets the looser tolerance.
fn stalled(status: SolveStatus, it: Iterate, best: Option<(f64, Iterate)>, opts: &SolverOptions) -> (SolveStatus, Iterate) {
    match best {
        Some((score, b)) if score <= opts.near_tol => (SolveStatus::NearOptimal, b),
        _ => (status, it),
    }
}

fn trivial_iterate(std: &Standard) -> Iterate {
    Iterate {
        x: vec![0.0; std.m],
        y: vec![0.0; std.nf],
        z: ConeVec::identity(&std.dims),
        s: ConeVec::identity(&std.dims),
        tau: 1.0,
        kappa: 1.0,
    }
}

fn extract(
    problem: &SdpProblem,
    std: &Standard,
    status: SolveStatus,
    it: Iterate,
    log: Vec<IterationRecord>,
) -> SdpSolution {
    let iterations = log.len().saturating_sub(1);
    // certificates are reported unnormalized; solutions divide by tau
    let tau = match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => 1.0,
        _ => it.tau,
    };
    let inv = 1.0 / tau;
    let mut duals: Vec<f64> = it.x.iter().zip(&std.row_scale).map(|(v, s)| v * s * inv).collect();
    let ineq_duals = duals.split_off(std.n_eq);
    let eq_duals = duals;
    let (psd, free, ineq_slack) = if status == SolveStatus::Infeasible {
        (Vec::new(), Vec::new(), Vec::new())
    } else {
        (
            it.z.psd.iter().map(|m| m * inv).collect(),
            it.y.iter().map(|v| v * inv).collect::<Vec<_>>(),
            it.z.lp.iter().map(|v| v * inv).collect(),
        )
    };
    let dual_slack: Vec<DMatrix<f64>> = it.s.psd.iter().map(|m| m * inv).collect();

    let (primal_objective, dual_objective, max_violation) = if status == SolveStatus::Infeasible {
        (f64::NAN, f64::NAN, f64::INFINITY)
    } else {
        let gtz = std.gt_apply(&it.z);
        let aty = std.free_apply_t(&it.y);
        let mut worst: f64 = 0.0;
        for i in 0..std.m {
            let res = (gtz[i] + aty[i] - it.tau * std.b[i]).abs() * inv / std.row_scale[i];
            worst = worst.max(res);
        }
        for mat in &psd {
            worst = worst.max(-crate::cone::min_sym_eigenvalue(mat));
        }
        for v in &ineq_slack {
            worst = worst.max(-v);
        }
        let pobj = (std.c_cone.dot(&it.z) + dot(&std.c_free, &it.y)) * inv;
        let dobj = dot(&std.b, &it.x) * inv;
        (pobj, dobj, worst)
    };
    let duality_gap = it.s.dot(&it.z) * inv * inv;
    let _ = problem;
    SdpSolution {
        status,
        psd,
        free,
        ineq_slack,
        eq_duals,
        ineq_duals,
        dual_slack,
        primal_objective,
        dual_objective,
        duality_gap,
        max_violation,
        iterations,
        log,
    }
}
