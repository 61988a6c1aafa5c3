#![allow(dead_code)]

use std::sync::Arc;

use ioc_core::bench::{generate, Benchmark, Region};
use ioc_core::iocp::{solve_iocp, IocpOptions, IocpSolution, LagrangianClass};
use ioc_core::polynomial::{monomial_basis, Polynomial, Var, VariableSpace};
use ioc_core::semialgebraic::ControlSystem;
use ioc_core::trajectory::TrajectoryDatabase;
use rand::Rng;

pub const N: usize = 500;
pub const S: usize = 50;
pub const SEED: u64 = 42;

pub struct Run {
    pub label: String,
    pub sys: ControlSystem,
    pub db: TrajectoryDatabase,
    pub sol: IocpSolution,
}

pub fn database(b: Benchmark, region: Region) -> TrajectoryDatabase {
    generate(b, N, S, SEED, region).expect("benchmark database")
}

pub fn solve(b: Benchmark, region: Region, a: u32, c: u32, deg_phi: u32) -> Run {
    let sys = b.system();
    let db = database(b, region);
    let class = LagrangianClass::for_system(a, c, &sys);
    let sol = solve_iocp(&sys, &db, class, deg_phi, &IocpOptions::default()).expect("iocp solve");
    Run {
        label: format!("{b} {region} L_{{{a},{c}}} deg {deg_phi}"),
        sys,
        db,
        sol,
    }
}

pub fn poly(space: &Arc<VariableSpace>, text: &str) -> Polynomial {
    Polynomial::parse(space, text).expect("test polynomial")
}

/// Random polynomial of degree `d` in `vars`; coefficients are multiples of
/// 1/8 in [-2, 2], so sums and products of a few of them are exact.
pub fn dyadic_poly<R: Rng>(rng: &mut R, space: &Arc<VariableSpace>, vars: &[Var], d: u32) -> Polynomial {
    Polynomial::from_terms(
        space,
        monomial_basis(vars, d)
            .elements
            .into_iter()
            .map(|m| (m, rng.gen_range(-16i32..=16) as f64 / 8.0)),
    )
}

/// Random polynomial of degree `d` in `vars` with coefficients in [-1, 1].
pub fn random_poly<R: Rng>(rng: &mut R, space: &Arc<VariableSpace>, vars: &[Var], d: u32) -> Polynomial {
    Polynomial::from_terms(
        space,
        monomial_basis(vars, d)
            .elements
            .into_iter()
            .map(|m| (m, rng.gen_range(-1.0..1.0))),
    )
}

pub fn all_vars(space: &VariableSpace) -> Vec<Var> {
    (0..space.dim()).collect()
}
