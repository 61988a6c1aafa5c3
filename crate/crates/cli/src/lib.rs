//! The `ioc` command line: generate databases, solve and verify inverse
//! problems, and rerun the benchmark tables.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

use config::{parse_class, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_NOT_OPTIMAL: i32 = 3;
/// Same value as `EX_USAGE` from sysexits.
pub const EXIT_USAGE: i32 = 64;

/// A message paired with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: msg.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "ioc", version, about = "Inverse optimal control through relaxed HJB certificates")]
pub struct Cli {
    /// JSON run configuration; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Worker threads for parallel solves and grids.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct DataArgs {
    /// lq | exitnorm | exittime | plp | plpP | brockett | custom
    #[arg(long)]
    pub problem: Option<String>,
    /// Control system JSON for `--problem custom`.
    #[arg(long, value_name = "FILE")]
    pub problem_file: Option<PathBuf>,
    /// Order of the `plp` family.
    #[arg(long)]
    pub p: Option<u32>,
    /// Number of trajectories.
    #[arg(long)]
    pub n: Option<usize>,
    /// Samples per trajectory.
    #[arg(long)]
    pub s: Option<usize>,
    /// Start-state region: ball | annulus:r
    #[arg(long)]
    pub region: Option<String>,
    /// Trajectory database file.
    #[arg(long, value_name = "FILE")]
    pub db: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SolveArgs {
    /// Lagrangian class `a,b`.
    #[arg(long, value_parser = parse_class)]
    pub class: Option<[u32; 2]>,
    /// Degree of phi.
    #[arg(long)]
    pub degphi: Option<u32>,
    /// First relaxation order of a hierarchy (deg phi = 2p).
    #[arg(long)]
    pub pmin: Option<u32>,
    /// Last relaxation order of a hierarchy.
    #[arg(long)]
    pub pmax: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a trajectory database.
    Gen {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Solve the inverse problem and write a result bundle.
    Solve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Minimum verification grid size.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Re-check a result bundle without the solver.
    Verify {
        #[arg(long, value_name = "FILE")]
        bundle: PathBuf,
        /// Database; regenerated from the bundle when omitted.
        #[arg(long, value_name = "FILE")]
        db: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Rerun the benchmark tables and write comparison CSVs.
    Tables {
        #[command(flatten)]
        data: DataArgs,
        /// Rows with a larger deg phi are exported as SDPA instead of solved.
        #[arg(long, env = "IOC_SOLVER_CEILING_DEGPHI", default_value_t = 8)]
        ceiling: u32,
    },
    /// Write the SDP of one inverse problem in SDPA sparse format.
    ExportSdpa {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), Failure> {
        set(&mut cfg.problem, self.problem.clone());
        if self.problem_file.is_some() {
            cfg.problem_file = self.problem_file.clone();
            if self.problem.is_none() {
                cfg.problem = "custom".into();
            }
        }
        if self.p.is_some() {
            cfg.p = self.p;
        }
        set(&mut cfg.n, self.n);
        set(&mut cfg.s, self.s);
        if let Some(r) = &self.region {
            cfg.region = r.parse().map_err(|e: ioc_core::CoreError| Failure::usage(e.to_string()))?;
        }
        if self.db.is_some() {
            cfg.db = self.db.clone();
        }
        set(&mut cfg.out, self.out.clone());
        Ok(())
    }
}

impl SolveArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.class, self.class);
        set(&mut cfg.deg_phi, self.degphi);
        if self.pmin.is_some() || self.pmax.is_some() {
            cfg.pmin = self.pmin;
            cfg.pmax = self.pmax;
        }
    }
}

/// Applies defaults, then the config file, then the flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    set(&mut cfg.seed, cli.seed);
    match &cli.command {
        Command::Gen { data } | Command::Tables { data, .. } => data.apply(&mut cfg)?,
        Command::Solve { data, solve, grid } => {
            data.apply(&mut cfg)?;
            solve.apply(&mut cfg);
            set(&mut cfg.grid_points, *grid);
        }
        Command::ExportSdpa { data, solve } => {
            data.apply(&mut cfg)?;
            solve.apply(&mut cfg);
        }
        Command::Verify { db, grid, .. } => {
            if db.is_some() {
                cfg.db = db.clone();
            }
            set(&mut cfg.grid_points, *grid);
        }
    }
    cfg.check()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    match &cli.command {
        Command::Gen { .. } => commands::generate(cfg),
        Command::Solve { .. } => commands::solve(cfg),
        Command::Verify { bundle, .. } => commands::verify(cfg, bundle),
        Command::Tables { ceiling, .. } => commands::tables(cfg, *ceiling),
        Command::ExportSdpa { .. } => commands::export_sdpa(cfg),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve(&cli).and_then(|cfg| {
        if cli.dump_config {
            let text = serde_json::to_string_pretty(&cfg).map_err(Failure::runtime)?;
            println!("{text}");
            return Ok(EXIT_OK);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs.unwrap_or(0))
            .build()
            .map_err(Failure::runtime)?;
        pool.install(|| dispatch(&cli, &cfg))
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("ioc").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"problem": "lq", "n": 20, "seed": 5, "class": [1, 0]}"#).unwrap();
        let p = path.to_str().unwrap();
        let cfg = resolve(&parse(&["--config", p, "solve", "--n", "30"])).unwrap();
        assert_eq!((cfg.problem.as_str(), cfg.n, cfg.seed, cfg.class), ("lq", 30, 5, [1, 0]));
        let cfg = resolve(&parse(&["solve", "--config", p, "--seed", "9", "--class", "2,2"])).unwrap();
        assert_eq!((cfg.seed, cfg.class), (9, [2, 2]));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(resolve(&parse(&["gen", "--n", "0"])).unwrap_err().code, EXIT_USAGE);
        assert_eq!(resolve(&parse(&["gen", "--problem", "nope"])).unwrap_err().code, EXIT_USAGE);
        assert_eq!(resolve(&parse(&["gen", "--region", "annulus:2"])).unwrap_err().code, EXIT_USAGE);
        assert_eq!(run(["ioc", "solve", "--class", "1"]), EXIT_USAGE);
        assert_eq!(run(["ioc", "frobnicate"]), EXIT_USAGE);
    }
}
