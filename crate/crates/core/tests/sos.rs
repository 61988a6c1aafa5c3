use std::sync::Arc;

use ioc_core::polynomial::{Polynomial, VariableSpace};
use ioc_core::semialgebraic::BasicSemialgebraicSet;
use ioc_core::sos::{compile_positivity, AffinePoly, PutinarCertificate};
use ioc_sdp::{solve, SdpProblem, SolveStatus, SolverOptions};

fn space() -> Arc<VariableSpace> {
    VariableSpace::with_names(None, &["x", "y"], &["u"]).unwrap()
}

fn whole_plane(space: &Arc<VariableSpace>) -> BasicSemialgebraicSet {
    BasicSemialgebraicSet::new(space.state_vars().to_vec(), vec![], vec![], 10.0).unwrap()
}

/// Status of the feasibility SDP `target = s0 + sum s_i g_i` at half degree `p`.
fn certify(target: &str, set: BasicSemialgebraicSet, p: u32) -> SolveStatus {
    let space = space();
    let target = Polynomial::parse(&space, target).unwrap();
    let mut sdp = SdpProblem::new();
    compile_positivity(
        &PutinarCertificate {
            target: AffinePoly::from_poly(&target),
            set,
            half_degree: p,
            label: "t".into(),
        },
        &mut sdp,
    )
    .unwrap();
    solve(&sdp, &SolverOptions::default()).unwrap().status
}

#[test]
fn sums_of_squares_are_certified_at_every_order() {
    let s = space();
    for (target, p0) in [("x^2 + 1", 1), ("x^4 - 2*x^2 + 1", 2), ("x^2 - 2*x*y + 2*y^2", 1)] {
        for p in p0..=p0 + 1 {
            let status = certify(target, whole_plane(&s), p);
            assert!(status.is_solved(), "{target} at p = {p}: {status}");
        }
    }
}

#[test]
fn negative_constants_are_rejected() {
    let s = space();
    for p in 1..=2 {
        assert_eq!(certify("-1", whole_plane(&s), p), SolveStatus::Infeasible);
        let disk = BasicSemialgebraicSet::ball(&s, s.state_vars(), 1.0);
        assert_eq!(certify("-1", disk, p), SolveStatus::Infeasible);
    }
}

#[test]
fn constraint_multipliers_extend_the_cone() {
    let s = space();
    let disk = || BasicSemialgebraicSet::ball(&s, s.state_vars(), 1.0);
    assert!(certify("1 - x^2 - y^2", disk(), 1).is_solved());
    assert!(certify("2 - x^2", disk(), 1).is_solved());
    assert!(certify("1 - x^2 - y^2", disk(), 2).is_solved());
    assert_eq!(certify("1 - x^2 - y^2", whole_plane(&s), 1), SolveStatus::Infeasible);
}
