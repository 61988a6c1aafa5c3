use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn ioc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ioc"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("run ioc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn solve_exitnorm(dir: &Path) -> std::path::PathBuf {
    let out = ioc(&["solve", "--problem", "exitnorm", "--n", "100", "--class", "1,1", "--degphi", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("verification passed"));
    dir.join("exitnorm_L11_deg2.json")
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = solve_exitnorm(dir.path());
    assert!(dir.path().join("exitnorm_L11_deg2.csv").exists());
    let out = ioc(&["verify", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn corrupted_phi_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = solve_exitnorm(dir.path());
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    v["phi"].as_array_mut().unwrap().push(json!({"monomial": "1", "coefficient": 0.5}));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = ioc(&["verify", "--bundle", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stdout(&out));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&ioc(&["verify", "--bundle", empty.to_str().unwrap()])), 64);
    assert_eq!(code(&ioc(&["gen", "--n", "0"])), 64);
    let missing = dir.path().join("missing.db.json");
    assert_eq!(code(&ioc(&["solve", "--db", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])), 64);
    assert_eq!(code(&ioc(&["solve", "--class", "x,1"])), 64);
    assert_eq!(code(&ioc(&["--help"])), 0);
}

#[test]
fn gen_labels_the_plp_family() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("plp.json");
    let out = ioc(&["gen", "--problem", "plp", "--p", "2", "--n", "20", "--db", db.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&db).unwrap()).unwrap();
    assert_eq!(v["problem"], "plp2");
    assert_eq!(v["intended_lagrangian"], "x1^2 + x2^2");
    assert_eq!(v["trajectories"].as_array().unwrap().len(), 20);
}

#[test]
fn solves_are_reproducible_and_accept_a_saved_database() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("et.json");
    assert_eq!(code(&ioc(&["gen", "--problem", "exittime", "--n", "60", "--seed", "3", "--db", db.to_str().unwrap()])), 0);
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = ioc(&["solve", "--db", db.to_str().unwrap(), "--problem", "exittime", "--class", "0,2", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("exittime_L02_deg2.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn export_sdpa_writes_a_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = ioc(&["export-sdpa", "--problem", "lq", "--n", "20", "--class", "1,1", "--degphi", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("lq_L11_deg4.dat-s")).unwrap();
    assert!(ioc_sdp::parse_sdpa(&text).is_ok());
}

#[test]
fn dump_config_reflects_flags() {
    let out = ioc(&["--dump-config", "solve", "--problem", "brockett", "--pmin", "1", "--pmax", "2"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["problem"], "brockett");
    assert_eq!((v["pmin"].as_u64(), v["pmax"].as_u64()), (Some(1), Some(2)));
}

#[test]
fn tables_below_the_ceiling_solve_and_the_rest_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ioc"))
        .args(["tables", "--n", "30", "--s", "10", "--out", dir.path().to_str().unwrap()])
        .env("IOC_SOLVER_CEILING_DEGPHI", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut rows = Vec::new();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            rows.extend(text.lines().skip(1).map(str::to_owned));
        }
    }
    assert_eq!(rows.len(), ioc_core::tables::reference_rows().len());
    assert!(rows.iter().any(|r| r.contains("exported")));
    assert!(dir.path().join("sdpa").read_dir().unwrap().count() > 0);
}
