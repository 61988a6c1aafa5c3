//! Inverse optimal control as a semidefinite program.
//!
//! Unknowns are a Lagrangian `L = m_a(x)^T C_x m_a(x) + m_b(u)^T C_u m_b(u)`,
//! a polynomial `phi` and a slack `eps`. The program asks for
//! `H_f(L, phi) >= 0` on the state-control set, `phi(T, .) <= 0` on `X_T`,
//! `phi(T, x) >= -eps` at terminal samples, a sampled integral of `H_f` at
//! most `eps`, and `tr C_x + tr C_u = C`, and minimizes `eps`.

use std::collections::BTreeMap;
use std::sync::Arc;

use ioc_sdp::{solve, LinearExpr, SdpProblem, SdpSolution, SolveStatus, SolverOptions, VarRef};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::polynomial::{hjb_operator, monomial_basis, Monomial, MonomialBasis, Polynomial, Var, VariableSpace};
use crate::semialgebraic::{ControlSystem, Horizon};
use crate::sos::{compile_positivity, gram_from_basis, AffinePoly, CompiledCertificate, GramVariable, PutinarCertificate};
use crate::trajectory::TrajectoryDatabase;

/// Lower bound imposed on `eps` to keep the feasible set bounded.
pub const EPSILON_FLOOR: f64 = -1.0;

/// The class `L_{a,b}` with trace normalization constant `C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianClass {
    pub a: u32,
    pub b: u32,
    pub normalization: f64,
    /// Drop the monomial `1` from both bases. For fixed horizons a constant
    /// Lagrangian with `phi = c (T - t)` is an exact certificate for any data,
    /// so constants are excluded there; `b = 0` then means no control part.
    #[serde(default)]
    pub without_constant: bool,
}

impl LagrangianClass {
    pub fn new(a: u32, b: u32) -> Self {
        Self {
            a,
            b,
            normalization: 1.0,
            without_constant: false,
        }
    }

    /// The class with the constant handling suited to the system's horizon.
    pub fn for_system(a: u32, b: u32, sys: &ControlSystem) -> Self {
        Self {
            without_constant: matches!(sys.horizon, Horizon::FixedTime(_)),
            ..Self::new(a, b)
        }
    }

    /// `m_d(vars)`, without `1` when constants are excluded.
    pub fn basis(&self, vars: &[Var], d: u32) -> MonomialBasis {
        let mut b = monomial_basis(vars, d);
        if self.without_constant {
            b.elements.retain(|m| !m.is_one());
        }
        b
    }
}

/// How sample values of `H_f` enter the integral constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralWeighting {
    /// Left-endpoint Riemann sum: sample `k` weighted by `t_{k+1} - t_k`.
    Riemann,
    /// Every non-terminal sample weighted by one.
    Uniform,
}

/// Whether the integral constraint sums or averages over trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralScale {
    Sum,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IocpOptions {
    pub weighting: IntegralWeighting,
    pub scale: IntegralScale,
    /// Impose `phi(t_k, x_k) >= -eps` at every sample instead of terminal ones only.
    pub boundary_at_all_samples: bool,
    /// Certificate half-degree; chosen from the degrees involved when absent.
    pub half_degree: Option<u32>,
    /// Drop the trace normalization (makes the zero solution feasible).
    pub drop_normalization: bool,
    pub solver: SolverOptions,
}

impl Default for IocpOptions {
    fn default() -> Self {
        Self {
            weighting: IntegralWeighting::Riemann,
            scale: IntegralScale::Mean,
            boundary_at_all_samples: false,
            half_degree: None,
            drop_normalization: false,
            solver: SolverOptions::default(),
        }
    }
}

/// Where the unknowns of the IOCP live inside the SDP.
#[derive(Clone, Debug)]
pub struct IocpLayout {
    pub space: Arc<VariableSpace>,
    pub class: LagrangianClass,
    pub deg_phi: u32,
    pub half_degree: u32,
    pub epsilon: usize,
    pub phi_basis: MonomialBasis,
    pub phi_coefs: Vec<usize>,
    /// Absent when the class leaves that part empty.
    pub gram_x: Option<GramVariable>,
    pub gram_u: Option<GramVariable>,
    /// `H_f(L, phi)` as a polynomial affine in the unknowns.
    pub hjb: AffinePoly,
    pub positivity: CompiledCertificate,
    pub terminal: CompiledCertificate,
    /// Per-trajectory sample weights of the integral constraint.
    pub weights: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct IocpProgram {
    pub sdp: SdpProblem,
    pub layout: IocpLayout,
}

fn phi_vars(sys: &ControlSystem) -> Vec<Var> {
    let mut vars = Vec::new();
    if let (Horizon::FixedTime(_), Some(t)) = (sys.horizon, sys.space.time_var()) {
        vars.push(t);
    }
    vars.extend_from_slice(sys.space.state_vars());
    vars
}

fn ceil_half(d: u32) -> u32 {
    d.div_ceil(2)
}

/// Per-sample weights of the integral constraint; terminal samples get zero.
pub fn sample_weights(db: &TrajectoryDatabase, opts: &IocpOptions) -> Vec<Vec<f64>> {
    let n_traj = db.trajectories.iter().filter(|t| !t.is_empty()).count().max(1) as f64;
    let scale = match opts.scale {
        IntegralScale::Sum => 1.0,
        IntegralScale::Mean => 1.0 / n_traj,
    };
    db.trajectories
        .iter()
        .map(|traj| {
            (0..traj.len())
                .map(|k| {
                    if k + 1 == traj.len() {
                        return 0.0;
                    }
                    scale
                        * match opts.weighting {
                            IntegralWeighting::Riemann => traj[k + 1].t - traj[k].t,
                            IntegralWeighting::Uniform => 1.0,
                        }
                })
                .collect()
        })
        .collect()
}

/// Builds the SDP of the inverse problem.
pub fn assemble(
    sys: &ControlSystem,
    db: &TrajectoryDatabase,
    class: LagrangianClass,
    deg_phi: u32,
    opts: &IocpOptions,
) -> Result<IocpProgram> {
    if db.is_empty() {
        return Err(CoreError::EmptyDatabase);
    }
    db.check_system(sys)?;
    if !(class.normalization > 0.0 && class.normalization.is_finite()) {
        return Err(CoreError::Invalid("normalization constant must be positive".into()));
    }
    let space = sys.space.clone();
    let mut sdp = SdpProblem::new();

    let epsilon = sdp.add_free("eps");
    let mut gram = |vars: &[Var], d: u32, label: &str| {
        let basis = class.basis(vars, d);
        (!basis.is_empty()).then(|| gram_from_basis(&mut sdp, &space, basis, label))
    };
    let gram_x = gram(space.state_vars(), class.a, "C_x");
    let gram_u = gram(space.control_vars(), class.b, "C_u");
    if gram_x.is_none() && gram_u.is_none() {
        return Err(CoreError::Invalid("the Lagrangian class is empty".into()));
    }
    let phi_basis = monomial_basis(&phi_vars(sys), deg_phi);
    let phi_coefs: Vec<usize> = (0..phi_basis.len())
        .map(|k| sdp.add_free(format!("phi[{}]", phi_basis.elements[k].render(&space))))
        .collect();

    let mut hjb = AffinePoly::zero(&space);
    for g in gram_x.iter().chain(&gram_u) {
        hjb.add(&g.as_affine(), 1.0);
    }
    let zero = Polynomial::zero(&space);
    let mut phi = AffinePoly::zero(&space);
    for (m, &k) in phi_basis.elements.iter().zip(&phi_coefs) {
        let mono = Polynomial::monomial(&space, m.clone(), 1.0);
        phi.add_var_times(VarRef::Free(k), &mono, 1.0);
        hjb.add_var_times(VarRef::Free(k), &hjb_operator(&zero, &mono, &sys.f, sys.mode())?, 1.0);
    }

    // positivity of H_f on [0, T] x X x U
    let mut domain = sys.x_set.product(&sys.u_set)?;
    if let Some(ts) = sys.time_set() {
        domain = ts.product(&domain)?;
    }
    let max_g = |s: &crate::semialgebraic::BasicSemialgebraicSet| {
        s.inequalities
            .iter()
            .chain(&s.equalities)
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    };
    let auto_p = ceil_half(hjb.degree())
        .max(ceil_half(deg_phi))
        .max(class.a)
        .max(class.b)
        .max(ceil_half(max_g(&domain)))
        .max(ceil_half(max_g(&sys.x_terminal)))
        .max(1);
    let half_degree = opts.half_degree.unwrap_or(auto_p);
    let positivity = compile_positivity(
        &PutinarCertificate {
            target: hjb.clone(),
            set: domain,
            half_degree,
            label: "H".into(),
        },
        &mut sdp,
    )?;

    // -phi(T, .) >= 0 on X_T
    let phi_t = match (sys.horizon, space.time_var()) {
        (Horizon::FixedTime(t_end), Some(t)) => phi.substitute(t, t_end),
        _ => phi.clone(),
    };
    let mut neg_phi_t = AffinePoly::zero(&space);
    neg_phi_t.add(&phi_t, -1.0);
    let terminal = compile_positivity(
        &PutinarCertificate {
            target: neg_phi_t,
            set: sys.x_terminal.clone(),
            half_degree: ceil_half(deg_phi).max(ceil_half(max_g(&sys.x_terminal))).max(1),
            label: "phiT".into(),
        },
        &mut sdp,
    )?;

    // phi(t_k, x_k) + eps >= 0, written as -phi - eps <= 0
    let eps_var = VarRef::Free(epsilon);
    for (i, traj) in db.trajectories.iter().enumerate() {
        for (k, s) in traj.iter().enumerate() {
            if !(s.is_terminal || opts.boundary_at_all_samples) {
                continue;
            }
            let z = space.point(s.t, &s.x, &s.u);
            let v = phi.eval(&z);
            let mut terms: Vec<(VarRef, f64)> = v.vars.iter().map(|(r, c)| (*r, -c)).collect();
            terms.push((eps_var, -1.0));
            sdp.add_ineq(LinearExpr::from_terms(terms), v.constant, format!("bound[{i},{k}]"));
        }
    }

    // sum_i sum_k w_ik H_f(z_ik) <= eps, via the weighted moments of the samples
    let weights = sample_weights(db, opts);
    let monomials: Vec<&Monomial> = hjb.terms().map(|(m, _)| m).collect();
    // per-trajectory moments in parallel, summed in a fixed order
    let per_traj: Vec<Vec<f64>> = db
        .trajectories
        .par_iter()
        .zip(&weights)
        .map(|(traj, w)| {
            let mut acc = vec![0.0; monomials.len()];
            for (s, &wk) in traj.iter().zip(w) {
                if wk == 0.0 {
                    continue;
                }
                let z = space.point(s.t, &s.x, &s.u);
                for (a, m) in acc.iter_mut().zip(&monomials) {
                    *a += wk * m.eval(&z);
                }
            }
            acc
        })
        .collect();
    let mut moments = vec![0.0; monomials.len()];
    for acc in &per_traj {
        for (x, y) in moments.iter_mut().zip(acc) {
            *x += y;
        }
    }
    let mut integral: BTreeMap<VarRef, f64> = BTreeMap::new();
    let mut constant = 0.0;
    for ((_, c), mv) in hjb.terms().zip(&moments) {
        constant += c.constant * mv;
        for (v, a) in &c.vars {
            *integral.entry(*v).or_insert(0.0) += a * mv;
        }
    }
    *integral.entry(eps_var).or_insert(0.0) -= 1.0;
    sdp.add_ineq(LinearExpr::from_terms(integral), -constant, "integral");

    if !opts.drop_normalization {
        let trace = gram_x
            .iter()
            .chain(&gram_u)
            .flat_map(|g| (0..g.size()).map(|i| (VarRef::psd(g.block, i, i), 1.0)));
        sdp.add_eq(LinearExpr::from_terms(trace), class.normalization, "trace");
    }
    sdp.add_ineq(LinearExpr::from_terms([(eps_var, -1.0)]), -EPSILON_FLOOR, "eps_floor");
    sdp.set_objective(LinearExpr::from_terms([(eps_var, 1.0)]));

    Ok(IocpProgram {
        sdp,
        layout: IocpLayout {
            space,
            class,
            deg_phi,
            half_degree,
            epsilon,
            phi_basis,
            phi_coefs,
            gram_x,
            gram_u,
            hjb,
            positivity,
            terminal,
            weights,
        },
    })
}

/// The triple `(L, phi, eps)` recovered from a solve, with solver diagnostics.
#[derive(Clone, Debug)]
pub struct IocpSolution {
    pub class: LagrangianClass,
    pub deg_phi: u32,
    pub half_degree: u32,
    pub lagrangian: Polynomial,
    pub phi: Polynomial,
    pub epsilon: f64,
    pub gram_x: DMatrix<f64>,
    pub gram_u: DMatrix<f64>,
    pub status: SolveStatus,
    /// Weighted integral of `H_f(L, phi)` per trajectory.
    pub trajectory_integrals: Vec<f64>,
    pub sdp: SdpSolution,
    pub sdp_rows: usize,
    pub notes: Vec<String>,
}

impl IocpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status.is_solved()
    }
}

fn gram_value(sol: &SdpSolution, g: &Option<GramVariable>) -> DMatrix<f64> {
    match g {
        Some(g) => match sol.psd.get(g.block) {
            Some(x) => x.clone(),
            None => DMatrix::zeros(g.size(), g.size()),
        },
        None => DMatrix::zeros(0, 0),
    }
}

fn gram_poly(space: &Arc<VariableSpace>, g: &Option<GramVariable>, q: &DMatrix<f64>) -> Result<Polynomial> {
    match g {
        Some(g) => g.reconstruct(q),
        None => Ok(Polynomial::zero(space)),
    }
}

/// Reads `(L, phi, eps)` out of a solved program.
pub fn extract(program: &IocpProgram, sol: SdpSolution) -> Result<IocpSolution> {
    let lay = &program.layout;
    let space = &lay.space;
    let gram_x = gram_value(&sol, &lay.gram_x);
    let gram_u = gram_value(&sol, &lay.gram_u);
    let lagrangian = gram_poly(space, &lay.gram_x, &gram_x)?.add(&gram_poly(space, &lay.gram_u, &gram_u)?)?;
    let free = |k: usize| sol.free.get(k).copied().unwrap_or(0.0);
    let phi = Polynomial::from_terms(
        space,
        lay.phi_basis
            .elements
            .iter()
            .zip(&lay.phi_coefs)
            .map(|(m, &k)| (m.clone(), free(k))),
    );
    let epsilon = free(lay.epsilon);
    let mut notes = Vec::new();
    let mut out = IocpSolution {
        class: lay.class,
        deg_phi: lay.deg_phi,
        half_degree: lay.half_degree,
        lagrangian,
        phi,
        epsilon,
        gram_x,
        gram_u,
        status: sol.status,
        trajectory_integrals: Vec::new(),
        sdp_rows: program.sdp.num_rows(),
        sdp: sol,
        notes: Vec::new(),
    };
    if out.status.is_solved() && epsilon < -1e-6 {
        notes.push(format!("negative eps {epsilon:.3e}: database points may lie outside the constraint sets"));
    }
    if !out.status.is_solved() {
        notes.push(format!("solver status {}", out.status));
    }
    out.notes = notes;
    Ok(out)
}

/// Per-trajectory weighted integrals of `H_f(L, phi)`.
pub fn trajectory_integrals(
    sys: &ControlSystem,
    db: &TrajectoryDatabase,
    l: &Polynomial,
    phi: &Polynomial,
    opts: &IocpOptions,
) -> Result<Vec<f64>> {
    let h = hjb_operator(l, phi, &sys.f, sys.mode())?;
    let weights = sample_weights(db, opts);
    Ok(db
        .trajectories
        .iter()
        .zip(&weights)
        .map(|(traj, w)| {
            traj.iter()
                .zip(w)
                .map(|(s, wk)| wk * h.eval_unchecked(&sys.space.point(s.t, &s.x, &s.u)))
                .sum()
        })
        .collect())
}

/// Assembles, solves and extracts one level.
pub fn solve_iocp(
    sys: &ControlSystem,
    db: &TrajectoryDatabase,
    class: LagrangianClass,
    deg_phi: u32,
    opts: &IocpOptions,
) -> Result<IocpSolution> {
    let program = assemble(sys, db, class, deg_phi, opts)?;
    log::info!(
        "iocp L_{{{},{}}} deg phi {deg_phi}: {}",
        class.a,
        class.b,
        program.sdp.size_summary()
    );
    let sol = solve(&program.sdp, &opts.solver)?;
    let mut out = extract(&program, sol)?;
    out.trajectory_integrals = trajectory_integrals(sys, db, &out.lagrangian, &out.phi, opts)?;
    Ok(out)
}

/// One solve per `phi` degree, run in parallel; failures are kept per level.
pub fn hierarchy(
    sys: &ControlSystem,
    db: &TrajectoryDatabase,
    class: LagrangianClass,
    deg_phis: &[u32],
    opts: &IocpOptions,
) -> Vec<Result<IocpSolution>> {
    deg_phis
        .par_iter()
        .map(|&d| solve_iocp(sys, db, class, d, opts))
        .collect()
}

/// Levels `i` where `eps` grew by more than `tol` over level `i - 1`.
pub fn monotonicity_violations(levels: &[Result<IocpSolution>], tol: f64) -> Vec<usize> {
    let eps: Vec<Option<f64>> = levels
        .iter()
        .map(|r| r.as_ref().ok().filter(|s| s.is_optimal()).map(|s| s.epsilon))
        .collect();
    (1..eps.len())
        .filter(|&i| matches!((eps[i - 1], eps[i]), (Some(a), Some(b)) if b > a + tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectorySample;

    fn exitnorm_db() -> (ControlSystem, TrajectoryDatabase) {
        let sys = crate::bench::Benchmark::ExitNorm.system();
        let db = crate::bench::gen_exitnorm(20, 10, 3);
        (sys, db)
    }

    #[test]
    fn empty_database_is_rejected() {
        let (sys, mut db) = exitnorm_db();
        db.trajectories.clear();
        assert!(matches!(
            assemble(&sys, &db, LagrangianClass::new(1, 1), 2, &IocpOptions::default()),
            Err(CoreError::EmptyDatabase)
        ));
    }

    #[test]
    fn forced_low_degree_names_the_term() {
        let (sys, db) = exitnorm_db();
        let opts = IocpOptions {
            half_degree: Some(1),
            ..Default::default()
        };
        let err = assemble(&sys, &db, LagrangianClass::new(2, 2), 2, &opts).unwrap_err();
        assert!(err.to_string().contains("certificate degree too low"), "{err}");
    }

    #[test]
    fn riemann_weights_follow_sample_spacing() {
        let mut db = exitnorm_db().1;
        db.trajectories.truncate(1);
        db.trajectories[0] = vec![
            TrajectorySample {
                t: 0.0,
                x: vec![0.5, 0.0],
                u: vec![0.5, 0.0],
                is_terminal: false,
            },
            TrajectorySample {
                t: 0.25,
                x: vec![0.6, 0.0],
                u: vec![0.6, 0.0],
                is_terminal: false,
            },
            TrajectorySample {
                t: 0.7,
                x: vec![1.0, 0.0],
                u: vec![1.0, 0.0],
                is_terminal: true,
            },
        ];
        let w = sample_weights(&db, &IocpOptions::default());
        assert_eq!(w, vec![vec![0.25, 0.44999999999999996, 0.0]]);
    }

    #[test]
    fn assembled_program_is_well_formed() {
        let (sys, db) = exitnorm_db();
        let prog = assemble(&sys, &db, LagrangianClass::new(1, 1), 2, &IocpOptions::default()).unwrap();
        prog.sdp.validate().unwrap();
        assert_eq!(prog.layout.half_degree, 1);
        // 20 terminal bounds + integral + eps floor
        assert_eq!(prog.sdp.ineq_constraints.len(), 22);
        assert_eq!(prog.sdp.eq_constraints.last().unwrap().label, "trace");
    }
}
