mod common;

use common::{poly, solve};
use ioc_core::bench::{Benchmark, Region};
use ioc_core::bundle::ResultBundle;
use ioc_core::iocp::{hierarchy, monotonicity_violations, solve_iocp, IocpOptions, LagrangianClass};
use ioc_core::verify::{verify_candidate, verify_certificate, Candidate, VerifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exitnorm_quadratic_class_recovers_equal_weights() {
    let run = solve(Benchmark::ExitNorm, Region::Ball, 1, 1, 2);
    assert!(run.sol.is_optimal());
    assert!(run.sol.epsilon <= 1e-6, "eps {}", run.sol.epsilon);
    let target = poly(&run.sys.space, "0.25*x1^2 + 0.25*x2^2 + 0.25*u1^2 + 0.25*u2^2");
    let diff = run.sol.lagrangian.sub(&target).unwrap();
    for (m, c) in diff.terms() {
        assert!(c.abs() < 1e-3, "{} off by {c:.3e}", m.render(&run.sys.space));
    }
}

#[test]
fn lagrangian_matches_its_gram_blocks() {
    let run = solve(Benchmark::Lq, Region::Ball, 1, 1, 4);
    let sol = &run.sol;
    let space = &run.sys.space;
    let mx = sol.class.basis(space.state_vars(), sol.class.a);
    let mu = sol.class.basis(space.control_vars(), sol.class.b);
    let quad = |basis: &ioc_core::polynomial::MonomialBasis, c: &nalgebra::DMatrix<f64>, z: &[f64]| {
        let v = nalgebra::DVector::from_vec(basis.eval(z));
        (v.transpose() * c * &v)[(0, 0)]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let z: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let want = quad(&mx, &sol.gram_x, &z) + quad(&mu, &sol.gram_u, &z);
        assert!((sol.lagrangian.evaluate(&z).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn conserved_quantity_is_an_exact_certificate() {
    // (1 - |u|^2)^2 vanishes wherever |u| = 1, so with phi = 0 every condition is tight
    let sys = Benchmark::ExitTime.system();
    let db = common::database(Benchmark::ExitTime, Region::Ball);
    let l = poly(&sys.space, "1 - 2*u1^2 - 2*u2^2 + u1^4 + 2*u1^2*u2^2 + u2^4").scale(1.0 / 3.0);
    let cand = Candidate {
        lagrangian: l,
        phi: poly(&sys.space, "0"),
        epsilon: 0.0,
        trace: Some((1.0, 1.0)),
    };
    let report = verify_candidate(&sys, &db, &cand, &VerifyOptions::default()).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.integral.abs() < 1e-12);
}

#[test]
fn shifted_certificate_pair_verifies_with_the_same_epsilon() {
    // L + grad(psi) . f with phi - psi leaves H unchanged; psi vanishes on the exit circle
    let run = solve(Benchmark::ExitNorm, Region::Ball, 1, 1, 2);
    let opts = VerifyOptions::default();
    let base = verify_certificate(&run.sys, &run.db, &run.sol, &opts).unwrap();
    assert!(base.passed(), "{base:?}");
    let space = &run.sys.space;
    let psi = poly(space, "0.3 - 0.3*x1^2 - 0.3*x2^2");
    let mut shift = poly(space, "0");
    for (i, &x) in space.state_vars().iter().enumerate() {
        shift = shift.add(&psi.differentiate(x).unwrap().mul(&run.sys.f[i]).unwrap()).unwrap();
    }
    let cand = Candidate {
        lagrangian: run.sol.lagrangian.add(&shift).unwrap(),
        phi: run.sol.phi.sub(&psi).unwrap(),
        epsilon: run.sol.epsilon,
        trace: None,
    };
    let report = verify_candidate(&run.sys, &run.db, &cand, &opts).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!((report.integral - base.integral).abs() < 1e-9);
}

#[test]
fn hierarchy_levels_agree_with_single_solves() {
    let sys = Benchmark::ExitTime.system();
    let db = common::database(Benchmark::ExitTime, Region::Ball);
    let class = LagrangianClass::for_system(0, 2, &sys);
    let opts = IocpOptions::default();
    let levels = hierarchy(&sys, &db, class, &[2, 4], &opts);
    assert!(monotonicity_violations(&levels, 1e-7).is_empty());
    let single = solve_iocp(&sys, &db, class, 4, &opts).unwrap();
    let level = levels[1].as_ref().unwrap();
    assert_eq!(level.epsilon.to_bits(), single.epsilon.to_bits());
    assert!(level.epsilon <= levels[0].as_ref().unwrap().epsilon + 1e-7);
}

#[test]
fn identical_solves_give_identical_bundles() {
    let bundle = || {
        let run = solve(Benchmark::Brockett, Region::Ball, 0, 2, 2);
        ResultBundle::new("brockett", &run.sys, &run.db, &run.sol, &IocpOptions::default())
            .to_json()
            .unwrap()
    };
    assert_eq!(bundle(), bundle());
}

#[test]
fn bundles_reproduce_the_candidate() {
    let run = solve(Benchmark::ExitNorm, Region::Ball, 1, 1, 2);
    let b = ResultBundle::new("exitnorm", &run.sys, &run.db, &run.sol, &IocpOptions::default());
    let back = ResultBundle::from_json(&b.to_json().unwrap()).unwrap();
    let (sys, cand) = back.candidate().unwrap();
    let report = verify_candidate(&sys, &run.db, &cand, &VerifyOptions::default()).unwrap();
    assert!(report.passed());
    assert_eq!(cand.epsilon.to_bits(), run.sol.epsilon.to_bits());
}
