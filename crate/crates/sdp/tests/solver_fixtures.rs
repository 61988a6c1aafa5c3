use ioc_sdp::{
    parse_sdpa, solve, to_sdpa_string, validate_solution, LinearExpr, SdpProblem, SdpSolution,
    SolveStatus, SolverOptions, VarRef,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn le(terms: &[(VarRef, f64)]) -> LinearExpr {
    LinearExpr::from_terms(terms.iter().copied())
}

/// minimize x subject to [[x, 1], [1, x]] PSD
fn x_star_one() -> SdpProblem {
    let mut p = SdpProblem::new();
    let b = p.add_psd_block(2, "X");
    let x = p.add_free("x");
    p.set_objective(le(&[(VarRef::Free(x), 1.0)]));
    p.add_eq(le(&[(VarRef::psd(b, 0, 0), 1.0), (VarRef::Free(x), -1.0)]), 0.0, "x00");
    p.add_eq(le(&[(VarRef::psd(b, 1, 1), 1.0), (VarRef::Free(x), -1.0)]), 0.0, "x11");
    p.add_eq(le(&[(VarRef::psd(b, 0, 1), 1.0)]), 1.0, "x01");
    p
}

fn trace_problem() -> SdpProblem {
    let mut p = SdpProblem::new();
    let q = p.add_psd_block(2, "Q");
    p.set_objective(le(&[(VarRef::psd(q, 0, 0), 1.0), (VarRef::psd(q, 1, 1), 1.0)]));
    p.add_eq(le(&[(VarRef::psd(q, 0, 0), 1.0)]), 1.0, "q11");
    p.add_eq(le(&[(VarRef::psd(q, 1, 1), 1.0)]), 1.0, "q22");
    p
}

/// `-1 = s0 + s1 (1 - x1^2 - x2^2)` with `s0` quadratic SOS and `s1` a nonnegative constant.
fn minus_one_on_ball() -> SdpProblem {
    let mut p = SdpProblem::new();
    let q0 = p.add_psd_block(3, "sigma0");
    let q1 = p.add_psd_block(1, "sigma1");
    let g = |r, c| VarRef::psd(q0, r, c);
    let s1 = VarRef::psd(q1, 0, 0);
    p.add_eq(le(&[(g(0, 0), 1.0), (s1, 1.0)]), -1.0, "1");
    p.add_eq(le(&[(g(0, 1), 2.0)]), 0.0, "x1");
    p.add_eq(le(&[(g(0, 2), 2.0)]), 0.0, "x2");
    p.add_eq(le(&[(g(1, 1), 1.0), (s1, -1.0)]), 0.0, "x1^2");
    p.add_eq(le(&[(g(1, 2), 2.0)]), 0.0, "x1x2");
    p.add_eq(le(&[(g(2, 2), 1.0), (s1, -1.0)]), 0.0, "x2^2");
    p
}

fn check_optimal(p: &SdpProblem, s: &SdpSolution) {
    let opts = SolverOptions::default();
    assert_eq!(s.status, SolveStatus::Optimal, "log:\n{}", ioc_sdp::format_log(&s.log));
    let rep = validate_solution(p, s);
    assert!(rep.is_feasible(1e-7, 1e-9), "{rep}");
    assert!((rep.max_violation - s.max_violation).abs() <= 1e-8, "{rep} vs {}", s.max_violation);
    assert!(s.primal_objective >= s.dual_objective - opts.gap_tol * 10.0);
    assert!((rep.objective - s.primal_objective).abs() <= 1e-7 * (1.0 + rep.objective.abs()));
}

#[test]
fn x_star_is_one() {
    let p = x_star_one();
    let s = solve(&p, &SolverOptions::default()).unwrap();
    check_optimal(&p, &s);
    assert!((s.free[0] - 1.0).abs() <= 1e-6, "x = {}", s.free[0]);
}

#[test]
fn trace_problem_optimum_is_two() {
    let p = trace_problem();
    let s = solve(&p, &SolverOptions::default()).unwrap();
    check_optimal(&p, &s);
    assert!((s.primal_objective - 2.0).abs() <= 1e-6);
    assert!(s.psd[0][(0, 1)].abs() <= 1.0 + 1e-8);
}

#[test]
fn minus_one_on_ball_is_infeasible() {
    let p = minus_one_on_ball();
    let s = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(s.status, SolveStatus::Infeasible, "log:\n{}", ioc_sdp::format_log(&s.log));
    let rep = validate_solution(&p, &s);
    assert!(!rep.has_primal);
    assert!(rep.notes.iter().any(|n| n.contains("no primal certificate")));
}

#[test]
fn unbounded_problem_is_detected() {
    let mut p = SdpProblem::new();
    let b = p.add_psd_block(1, "X");
    let v = p.add_free("v");
    p.set_objective(le(&[(VarRef::Free(v), -1.0)]));
    p.add_eq(le(&[(VarRef::psd(b, 0, 0), 1.0), (VarRef::Free(v), -1.0)]), 0.0, "link");
    let s = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(s.status, SolveStatus::Unbounded, "log:\n{}", ioc_sdp::format_log(&s.log));
}

#[test]
fn inequality_rows_bind() {
    // minimize -v subject to v <= 3, v - X = 0, X PSD
    let mut p = SdpProblem::new();
    let b = p.add_psd_block(1, "X");
    let v = p.add_free("v");
    p.set_objective(le(&[(VarRef::Free(v), -1.0)]));
    p.add_eq(le(&[(VarRef::psd(b, 0, 0), 1.0), (VarRef::Free(v), -1.0)]), 0.0, "link");
    p.add_ineq(le(&[(VarRef::Free(v), 1.0)]), 3.0, "cap");
    let s = solve(&p, &SolverOptions::default()).unwrap();
    check_optimal(&p, &s);
    assert!((s.free[0] - 3.0).abs() <= 1e-6);
    assert!((s.ineq_duals[0] + 1.0).abs() <= 1e-6, "dual {}", s.ineq_duals[0]);
}

#[test]
fn perturbed_solution_reports_negative_eigenvalue() {
    let p = x_star_one();
    let mut s = solve(&p, &SolverOptions::default()).unwrap();
    s.free[0] = 0.5;
    s.psd[0] = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.5]);
    let rep = validate_solution(&p, &s);
    assert!((rep.min_eigenvalue + 0.5).abs() <= 1e-12);
    assert!((rep.max_violation - 0.5).abs() <= 1e-12);
    assert!(!rep.is_feasible(1e-8, 1e-9));
}

/// min <C, X> s.t. tr X = 1 has optimum lambda_min(C), computed here by a dense eigensolver.
#[test]
fn min_eigenvalue_problems_match_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [1usize, 3, 6, 10] {
        let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let c = (&c + c.transpose()) * 0.5;
        let mut p = SdpProblem::new();
        let b = p.add_psd_block(n, "X");
        let mut obj = Vec::new();
        let mut tr = Vec::new();
        for i in 0..n {
            tr.push((VarRef::psd(b, i, i), 1.0));
            for j in i..n {
                let w = if i == j { c[(i, i)] } else { 2.0 * c[(i, j)] };
                obj.push((VarRef::psd(b, i, j), w));
            }
        }
        p.set_objective(le(&obj));
        p.add_eq(le(&tr), 1.0, "trace");
        let s = solve(&p, &SolverOptions::default()).unwrap();
        check_optimal(&p, &s);
        let lmin = SymmetricEigen::new(c).eigenvalues.min();
        assert!((s.primal_objective - lmin).abs() <= 1e-6, "n={n}: {} vs {lmin}", s.primal_objective);
    }
}

#[test]
fn solve_is_deterministic() {
    let p = minus_one_on_ball();
    let a = solve(&p, &SolverOptions::default()).unwrap();
    let b = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(a.log, b.log);
    let p = x_star_one();
    let a = solve(&p, &SolverOptions::default()).unwrap();
    let b = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(a.free, b.free);
    assert_eq!(a.psd, b.psd);
}

#[test]
fn max_iter_is_a_status() {
    let p = x_star_one();
    let opts = SolverOptions {
        max_iter: 1,
        ..SolverOptions::default()
    };
    let s = solve(&p, &opts).unwrap();
    assert_eq!(s.status, SolveStatus::MaxIter);
}

#[test]
fn exported_problem_solves_identically() {
    for p in [x_star_one(), trace_problem()] {
        let back = parse_sdpa(&to_sdpa_string(&p).unwrap()).unwrap();
        let a = solve(&p, &SolverOptions::default()).unwrap();
        let b = solve(&back, &SolverOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.primal_objective - b.primal_objective).abs() <= 1e-9);
    }
}
