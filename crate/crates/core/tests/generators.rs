mod common;

use ioc_core::bench::{gen_brockett, gen_plp, generate, Benchmark, BrockettSubcase, Region, RiccatiSolution, RICCATI_STEPS};
use ioc_core::trajectory::{TrajectoryDatabase, TrajectorySample};

const ALL: [Benchmark; 5] = [
    Benchmark::Lq,
    Benchmark::ExitNorm,
    Benchmark::ExitTime,
    Benchmark::Plp(2),
    Benchmark::Brockett,
];

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Trapezoid rule of `g` along one trajectory.
fn trapezoid(traj: &[TrajectorySample], g: impl Fn(&TrajectorySample) -> f64) -> f64 {
    traj.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (g(&w[0]) + g(&w[1]))).sum()
}

fn small(b: Benchmark, region: Region) -> TrajectoryDatabase {
    generate(b, 100, common::S, common::SEED, region).unwrap()
}

#[test]
fn every_generator_satisfies_its_invariants() {
    for b in ALL {
        let db = small(b, Region::Ball);
        let report = db.check_invariants(&b.system());
        assert!(report.ok(), "{b}: {:?}", &report.violations[..report.violations.len().min(3)]);
        assert_eq!(report.unterminated, 0, "{b}");
        assert_eq!(db.trajectories.len(), 100);
    }
    let annulus = small(Benchmark::ExitTime, Region::Annulus(0.5));
    assert!(annulus.check_invariants(&Benchmark::ExitTime.system()).ok());
    assert!(annulus.trajectories.iter().all(|t| norm(&t[0].x) >= 0.5));
}

#[test]
fn terminal_and_conserved_quantities() {
    let db = small(Benchmark::ExitNorm, Region::Ball);
    for s in db.terminal_samples() {
        assert!((norm(&s.x) - 1.0).abs() < 1e-9);
    }
    let db = small(Benchmark::ExitTime, Region::Ball);
    for s in db.samples() {
        assert!((norm(&s.u) - 1.0).abs() < 1e-12);
    }
    let db = gen_brockett(100, common::S, common::SEED, BrockettSubcase::Planar);
    for s in db.samples() {
        assert!((s.x[1] * s.u[0] - s.x[0] * s.u[1]).abs() < 1e-12);
        assert_eq!(s.x[2], 0.0);
    }
    let db = gen_brockett(100, common::S, common::SEED, BrockettSubcase::Axis);
    assert!(db.check_invariants(&Benchmark::Brockett.system()).ok());
    let db = small(Benchmark::Lq, Region::Ball);
    for s in db.terminal_samples() {
        assert!((s.t - 1.0).abs() < 1e-12);
        assert!(s.u[0].abs() < 1e-12);
    }
}

#[test]
fn costs_match_the_closed_form_values() {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);

    let db = small(Benchmark::ExitNorm, Region::Ball);
    for t in &db.trajectories {
        let j = trapezoid(t, |s| s.x.iter().chain(&s.u).map(|v| v * v).sum());
        assert!(rel(j, 1.0 - norm(&t[0].x).powi(2)) < 1e-3);
    }
    let db = small(Benchmark::ExitTime, Region::Ball);
    for t in &db.trajectories {
        assert!(rel(trapezoid(t, |_| 1.0), 1.0 - norm(&t[0].x)) < 1e-12);
    }
    let db = small(Benchmark::Plp(2), Region::Ball);
    for t in &db.trajectories {
        let j = trapezoid(t, |s| s.x.iter().map(|v| v * v).sum());
        assert!(rel(j, (1.0 - norm(&t[0].x).powi(3)) / 3.0) < 1e-3);
    }
    let ric = RiccatiSolution::solve(1.0, RICCATI_STEPS);
    let db = small(Benchmark::Lq, Region::Ball);
    for t in &db.trajectories {
        let j = trapezoid(t, |s| {
            let (x1, x2, u) = (s.x[0], s.x[1], s.u[0]);
            2.0 * x1 * x1 + 0.5 * x1 * x2 + x2 * x2 + u * u
        });
        assert!(rel(j, ric.value(t[0].t, &t[0].x)) < 1e-3);
    }
}

#[test]
fn plp2_cost_from_a_fixed_start() {
    // straight exit from (0.5, 0): integral of (0.5 + t)^2 over [0, 0.5]
    let x0 = 0.5f64;
    let steps = 1000;
    let traj: Vec<TrajectorySample> = (0..=steps)
        .map(|k| {
            let t = 0.5 * k as f64 / steps as f64;
            TrajectorySample {
                t,
                x: vec![x0 + t, 0.0],
                u: vec![1.0, 0.0],
                is_terminal: k == steps,
            }
        })
        .collect();
    let j = trapezoid(&traj, |s| s.x[0] * s.x[0]);
    assert!((j - 0.29167).abs() < 1e-5);
}

#[test]
fn generation_is_deterministic() {
    for b in ALL {
        let a = small(b, Region::Ball).to_json().unwrap();
        assert_eq!(a, small(b, Region::Ball).to_json().unwrap(), "{b}");
        let other = generate(b, 100, common::S, common::SEED + 1, Region::Ball).unwrap();
        assert_ne!(a, other.to_json().unwrap(), "{b}");
    }
}

#[test]
fn plp_family_shares_the_exit_time_trajectories() {
    let base = small(Benchmark::ExitTime, Region::Ball);
    for p in 0..4 {
        let db = gen_plp(p, 100, common::S, common::SEED, Region::Ball).unwrap();
        assert_eq!(db.trajectories, base.trajectories);
        assert_eq!(db.problem, format!("plp{p}"));
    }
}

#[test]
fn json_round_trip_preserves_generated_data() {
    let db = small(Benchmark::Brockett, Region::Ball);
    let back = TrajectoryDatabase::from_json(&db.to_json().unwrap()).unwrap();
    assert_eq!(back.trajectories, db.trajectories);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.json");
    db.save(&path).unwrap();
    assert_eq!(TrajectoryDatabase::load(&path).unwrap().trajectories, db.trajectories);
}
