//! Subcommand implementations. Each returns the exit code on completion.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ioc_core::bench::{generate as generate_db, Benchmark, Region};
use ioc_core::bundle::ResultBundle;
use ioc_core::compare::compare_lagrangians;
use ioc_core::iocp::{assemble, hierarchy, monotonicity_violations, IocpSolution, LagrangianClass};
use ioc_core::polynomial::Polynomial;
use ioc_core::semialgebraic::{ControlSystem, ProblemFile};
use ioc_core::tables::{reference_rows, ReferenceRow};
use ioc_core::trajectory::TrajectoryDatabase;
use ioc_core::verify::{verify_candidate, verify_certificate, VerificationReport};
use rayon::prelude::*;

use crate::config::{ProblemId, RunConfig};
use crate::{Failure, EXIT_NOT_OPTIMAL, EXIT_OK, EXIT_RUNTIME, EXIT_VERIFY};

/// Tolerance of the hierarchy monotonicity check.
const MONOTONE_TOL: f64 = 1e-7;

/// The system, its display name, and the benchmark when built in.
struct Problem {
    name: String,
    system: ControlSystem,
    benchmark: Option<Benchmark>,
}

fn load_problem(cfg: &RunConfig) -> Result<Problem, Failure> {
    match cfg.problem_id()? {
        ProblemId::Builtin(b) => Ok(Problem {
            name: b.to_string(),
            system: b.system(),
            benchmark: Some(b),
        }),
        ProblemId::Custom(path) => {
            let text = read_input(&path, "problem file")?;
            let file = ProblemFile::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let system = file.build().map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            Ok(Problem {
                name: file.name,
                system,
                benchmark: None,
            })
        }
    }
}

fn read_input(path: &Path, what: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_db(path: &Path, sys: &ControlSystem) -> Result<TrajectoryDatabase, Failure> {
    let text = read_input(path, "database")?;
    let db = TrajectoryDatabase::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    db.check_system(sys)
        .map_err(|e| Failure::usage(format!("{} does not match the problem: {e}", path.display())))?;
    Ok(db)
}

/// The configured database, or a generated one with its region.
fn database(cfg: &RunConfig, prob: &Problem) -> Result<(TrajectoryDatabase, Option<Region>), Failure> {
    if let Some(path) = &cfg.db {
        return Ok((load_db(path, &prob.system)?, None));
    }
    match prob.benchmark {
        Some(b) => Ok((
            generate_db(b, cfg.n, cfg.s, cfg.seed, cfg.region).map_err(Failure::runtime)?,
            Some(cfg.region),
        )),
        None => Err(Failure::usage("a custom problem needs --db")),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn generate(cfg: &RunConfig) -> Result<i32, Failure> {
    let prob = load_problem(cfg)?;
    let b = prob
        .benchmark
        .ok_or_else(|| Failure::usage("gen needs a built-in problem"))?;
    let db = generate_db(b, cfg.n, cfg.s, cfg.seed, cfg.region).map_err(Failure::runtime)?;
    let path = match &cfg.db {
        Some(p) => p.clone(),
        None => {
            create_dir(&cfg.out)?;
            cfg.out.join(format!("{}.db.json", prob.name))
        }
    };
    db.save(&path).map_err(Failure::runtime)?;
    let report = db.check_invariants(&prob.system);
    println!("problem {} ({})", prob.name, db.intended_lagrangian.as_deref().unwrap_or("?"));
    println!(
        "{} trajectories, {} samples, {} terminal, region {}",
        db.trajectories.len(),
        db.num_samples(),
        db.terminal_samples().count(),
        db.sample_region
    );
    println!(
        "invariants: {} ({} violations, {} unterminated, dynamics ratio {:.3})",
        if report.ok() { "ok" } else { "FAILED" },
        report.violations.len(),
        report.unterminated,
        report.max_dynamics_ratio
    );
    for v in report.violations.iter().take(10) {
        println!("  {v}");
    }
    println!("wrote {}", path.display());
    Ok(if report.ok() { EXIT_OK } else { EXIT_RUNTIME })
}

fn stem(prob: &Problem, class: &LagrangianClass, deg_phi: u32) -> String {
    format!("{}_L{}{}_deg{}", prob.name, class.a, class.b, deg_phi)
}

fn csv_text(bundle: &ResultBundle) -> String {
    format!("{}\n{}\n", ResultBundle::CSV_HEADER, bundle.csv_row())
}

fn build_bundle(
    cfg: &RunConfig,
    prob: &Problem,
    db: &TrajectoryDatabase,
    region: Option<Region>,
    sol: &IocpSolution,
) -> Result<ResultBundle, Failure> {
    let mut bundle = ResultBundle::new(&prob.name, &prob.system, db, sol, &cfg.iocp);
    bundle.region = region;
    if let Some(b) = prob.benchmark {
        bundle.target_lagrangian = Some(b.target_lagrangian());
        if let Some(target) = b.target_polynomial(&prob.system) {
            bundle.similarity = compare_lagrangians(&sol.lagrangian, &target).ok();
        }
    }
    if sol.is_optimal() {
        let report = verify_certificate(&prob.system, db, sol, &cfg.verify_options()).map_err(Failure::runtime)?;
        bundle.verification = Some(report);
    }
    Ok(bundle)
}

pub fn solve(cfg: &RunConfig) -> Result<i32, Failure> {
    let prob = load_problem(cfg)?;
    let (db, region) = database(cfg, &prob)?;
    let class = LagrangianClass::for_system(cfg.class[0], cfg.class[1], &prob.system);
    let degrees = cfg.degrees()?;
    create_dir(&cfg.out)?;
    let levels = hierarchy(&prob.system, &db, class, &degrees, &cfg.iocp);
    let mut code = EXIT_OK;
    for (deg, level) in degrees.iter().zip(&levels) {
        let sol = match level {
            Ok(sol) => sol,
            Err(e) => {
                eprintln!("deg phi {deg}: {e}");
                code = EXIT_RUNTIME;
                continue;
            }
        };
        let bundle = build_bundle(cfg, &prob, &db, region, sol)?;
        let base = cfg.out.join(stem(&prob, &class, *deg));
        let json = base.with_extension("json");
        bundle.save(&json).map_err(Failure::runtime)?;
        write_file(&base.with_extension("csv"), &csv_text(&bundle))?;
        println!(
            "L_{{{},{}}} deg phi {deg}: status {}, eps {:.6e}",
            class.a, class.b, bundle.status, bundle.epsilon
        );
        println!("  L = {}", sol.lagrangian);
        if let Some(sim) = &bundle.similarity {
            println!(
                "  similarity to {}: {:.6}",
                bundle.target_lagrangian.as_deref().unwrap_or("target"),
                sim.similarity
            );
            if !prob.system.u_set.equalities.is_empty() {
                println!("  (U is an equality set, so L is only determined modulo its equations)");
            }
        }
        match &bundle.verification {
            Some(v) if v.passed() => println!("  verification passed"),
            Some(v) => {
                print!("  verification FAILED\n{v}");
                if code == EXIT_OK {
                    code = EXIT_VERIFY;
                }
            }
            None => {}
        }
        if !sol.is_optimal() && code != EXIT_RUNTIME {
            code = EXIT_NOT_OPTIMAL;
        }
        println!("  wrote {}", json.display());
    }
    for i in monotonicity_violations(&levels, MONOTONE_TOL) {
        eprintln!("warning: eps increased from deg phi {} to {}", degrees[i - 1], degrees[i]);
    }
    Ok(code)
}

/// Regenerates the database of a bundle produced from a built-in generator.
fn bundle_db(cfg: &RunConfig, bundle: &ResultBundle, sys: &ControlSystem) -> Result<TrajectoryDatabase, Failure> {
    if let Some(path) = &cfg.db {
        return load_db(path, sys);
    }
    let (Ok(b), Some(region)) = (bundle.problem.parse::<Benchmark>(), bundle.region) else {
        return Err(Failure::usage("bundle does not record its generator; pass --db"));
    };
    generate_db(b, bundle.trajectories, bundle.samples_per_trajectory, bundle.seed, region).map_err(Failure::runtime)
}

pub fn verify(cfg: &RunConfig, path: &Path) -> Result<i32, Failure> {
    let text = read_input(path, "bundle")?;
    if text.trim().is_empty() {
        return Err(Failure::usage(format!("{} is empty", path.display())));
    }
    let bundle = ResultBundle::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let (sys, cand) = bundle
        .candidate()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let db = bundle_db(cfg, &bundle, &sys)?;
    let opts = ioc_core::verify::VerifyOptions {
        iocp: bundle.options.clone(),
        ..cfg.verify_options()
    };
    let report = verify_candidate(&sys, &db, &cand, &opts).map_err(Failure::runtime)?;
    print!("{report}");
    if report.passed() {
        println!("verification passed");
        Ok(EXIT_OK)
    } else {
        for c in report.failures() {
            println!(
                "violation: {} = {:.6e} (limit {:.6e}) at {}",
                c.name,
                c.value,
                c.limit,
                c.location.as_deref().unwrap_or("database samples")
            );
        }
        Ok(EXIT_VERIFY)
    }
}

pub fn export_sdpa(cfg: &RunConfig) -> Result<i32, Failure> {
    let prob = load_problem(cfg)?;
    let (db, _) = database(cfg, &prob)?;
    let class = LagrangianClass::for_system(cfg.class[0], cfg.class[1], &prob.system);
    create_dir(&cfg.out)?;
    for deg in cfg.degrees()? {
        let program = assemble(&prob.system, &db, class, deg, &cfg.iocp).map_err(Failure::runtime)?;
        let path = cfg.out.join(stem(&prob, &class, deg)).with_extension("dat-s");
        ioc_sdp::export_sdpa(&program.sdp, &path).map_err(Failure::runtime)?;
        println!("deg phi {deg}: {} -> {}", program.sdp.size_summary(), path.display());
    }
    Ok(EXIT_OK)
}

/// Outcome of one table row.
#[derive(Default)]
struct RowResult {
    status: String,
    epsilon: Option<f64>,
    similarity_reference: Option<f64>,
    similarity_target: Option<f64>,
    verified: Option<bool>,
    lagrangian: String,
    sdpa: Option<PathBuf>,
    error: Option<String>,
}

fn run_row(
    cfg: &RunConfig,
    row: &ReferenceRow,
    db: &Result<TrajectoryDatabase, String>,
    ceiling: u32,
) -> RowResult {
    let fail = |e: String| RowResult {
        status: "error".into(),
        error: Some(e),
        ..RowResult::default()
    };
    let db = match db {
        Ok(db) => db,
        Err(e) => return fail(e.clone()),
    };
    let sys = row.benchmark.system();
    let class = LagrangianClass::for_system(row.a, row.b, &sys);
    if row.deg_phi > ceiling {
        let dir = cfg.out.join("sdpa");
        let path = dir.join(format!("table{}_row{}.dat-s", row.table, row.row));
        let exported = std::fs::create_dir_all(&dir)
            .map_err(|e| e.to_string())
            .and_then(|_| assemble(&sys, db, class, row.deg_phi, &cfg.iocp).map_err(|e| e.to_string()))
            .and_then(|p| ioc_sdp::export_sdpa(&p.sdp, &path).map_err(|e| e.to_string()));
        return match exported {
            Ok(()) => RowResult {
                status: "exported".into(),
                sdpa: Some(path),
                ..RowResult::default()
            },
            Err(e) => fail(e),
        };
    }
    let sol = match ioc_core::iocp::solve_iocp(&sys, db, class, row.deg_phi, &cfg.iocp) {
        Ok(sol) => sol,
        Err(e) => return fail(e.to_string()),
    };
    let similarity = |text: Option<&str>| -> Option<f64> {
        let target = Polynomial::parse(&sys.space, text?).ok()?;
        compare_lagrangians(&sol.lagrangian, &target).ok().map(|r| r.similarity)
    };
    let verified = sol.is_optimal().then(|| {
        verify_certificate(&sys, db, &sol, &cfg.verify_options())
            .as_ref()
            .map(VerificationReport::passed)
            .unwrap_or(false)
    });
    RowResult {
        status: sol.status.to_string(),
        epsilon: Some(sol.epsilon),
        similarity_reference: similarity(row.reference),
        similarity_target: row
            .benchmark
            .target_polynomial(&sys)
            .and_then(|t| compare_lagrangians(&sol.lagrangian, &t).ok())
            .map(|r| r.similarity),
        verified,
        lagrangian: sol.lagrangian.to_string(),
        sdpa: None,
        error: None,
    }
}

pub const TABLE_HEADER: &str = "table,row,problem,region,a,b,deg_phi,reference_epsilon,band_low,band_high,status,epsilon,in_band,similarity_reference,similarity_target,verified,sdpa,error,reference_lagrangian,lagrangian";

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn table_line(row: &ReferenceRow, r: &RowResult) -> String {
    let num = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    let in_band = r.epsilon.map(|e| (row.band.0 <= e && e <= row.band.1).to_string());
    format!(
        "{},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{},{},{},{},{},{},{},{},{},{}",
        row.table,
        row.row,
        row.benchmark,
        row.region,
        row.a,
        row.b,
        row.deg_phi,
        row.epsilon,
        row.band.0,
        row.band.1,
        r.status,
        num(r.epsilon),
        in_band.unwrap_or_default(),
        num(r.similarity_reference),
        num(r.similarity_target),
        r.verified.map(|v| v.to_string()).unwrap_or_default(),
        r.sdpa.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        quote(r.error.as_deref().unwrap_or("")),
        quote(row.lagrangian),
        quote(&r.lagrangian),
    )
}

pub fn tables(cfg: &RunConfig, ceiling: u32) -> Result<i32, Failure> {
    create_dir(&cfg.out)?;
    let rows = reference_rows();
    let keys: Vec<(Benchmark, Region)> = rows
        .iter()
        .map(|r| (r.benchmark, r.region))
        .fold(Vec::new(), |mut acc, k| {
            if !acc.contains(&k) {
                acc.push(k);
            }
            acc
        });
    let dbs: Vec<Result<TrajectoryDatabase, String>> = keys
        .par_iter()
        .map(|&(b, region)| generate_db(b, cfg.n, cfg.s, cfg.seed, region).map_err(|e| e.to_string()))
        .collect();
    let results: Vec<RowResult> = rows
        .par_iter()
        .map(|row| {
            let k = keys.iter().position(|&k| k == (row.benchmark, row.region)).expect("key of a row");
            let r = run_row(cfg, row, &dbs[k], ceiling);
            eprintln!("table {} row {}: {}", row.table, row.row, r.status);
            r
        })
        .collect();
    let mut by_table: BTreeMap<u8, String> = BTreeMap::new();
    for (row, r) in rows.iter().zip(&results) {
        let text = by_table.entry(row.table).or_insert_with(|| format!("{TABLE_HEADER}\n"));
        let _ = writeln!(text, "{}", table_line(row, r));
    }
    for (t, text) in &by_table {
        let path = cfg.out.join(format!("table{t}.csv"));
        write_file(&path, text)?;
        println!("wrote {}", path.display());
    }
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        println!("{failed} rows failed; see the error column");
    }
    Ok(EXIT_OK)
}
