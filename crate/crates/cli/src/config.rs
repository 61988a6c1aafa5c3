//! Resolved run configuration: defaults, then a JSON file, then flags.

use std::path::PathBuf;

use ioc_core::bench::{Benchmark, Region, DEFAULT_SAMPLES};
use ioc_core::iocp::IocpOptions;
use ioc_core::verify::VerifyOptions;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Benchmark id (`lq`, `exitnorm`, `exittime`, `plp`, `plp2`, `brockett`) or `custom`.
    pub problem: String,
    /// JSON control system used when `problem` is `custom`.
    pub problem_file: Option<PathBuf>,
    /// Order `p` when `problem` is the bare `plp`.
    pub p: Option<u32>,
    pub class: [u32; 2],
    pub deg_phi: u32,
    /// Relaxation orders for a hierarchy run; level `p` uses `deg phi = 2p`.
    pub pmin: Option<u32>,
    pub pmax: Option<u32>,
    pub n: usize,
    pub s: usize,
    pub seed: u64,
    pub region: Region,
    /// Database to read (solve, verify, export-sdpa) or write (gen).
    pub db: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub grid_points: usize,
    pub tol_grid: f64,
    pub iocp: IocpOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let v = VerifyOptions::default();
        Self {
            problem: "exitnorm".into(),
            problem_file: None,
            p: None,
            class: [1, 1],
            deg_phi: 2,
            pmin: None,
            pmax: None,
            n: 500,
            s: DEFAULT_SAMPLES,
            seed: 42,
            region: Region::Ball,
            db: None,
            out: PathBuf::from("out"),
            jobs: None,
            grid_points: v.grid_points,
            tol_grid: v.tol_grid,
            iocp: IocpOptions::default(),
        }
    }
}

/// What `problem` refers to after resolution.
pub enum ProblemId {
    Builtin(Benchmark),
    Custom(PathBuf),
}

impl RunConfig {
    pub fn problem_id(&self) -> Result<ProblemId, Failure> {
        match self.problem.as_str() {
            "custom" => self
                .problem_file
                .clone()
                .map(ProblemId::Custom)
                .ok_or_else(|| Failure::usage("problem `custom` needs --problem-file")),
            "plp" => match self.p {
                Some(p) => Ok(ProblemId::Builtin(Benchmark::Plp(p))),
                None => Err(Failure::usage("problem `plp` needs --p")),
            },
            id => id.parse().map(ProblemId::Builtin).map_err(|e| Failure::usage(e.to_string())),
        }
    }

    /// `phi` degrees to solve, one per hierarchy level.
    pub fn degrees(&self) -> Result<Vec<u32>, Failure> {
        match (self.pmin, self.pmax) {
            (None, None) => Ok(vec![self.deg_phi]),
            (Some(lo), Some(hi)) if lo <= hi => Ok((lo..=hi).map(|p| 2 * p).collect()),
            (Some(_), Some(_)) => Err(Failure::usage("--pmin must not exceed --pmax")),
            _ => Err(Failure::usage("--pmin and --pmax go together")),
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            grid_points: self.grid_points,
            tol_grid: self.tol_grid,
            iocp: self.iocp.clone(),
            ..VerifyOptions::default()
        }
    }

    pub fn check(&self) -> Result<(), Failure> {
        if self.n == 0 {
            return Err(Failure::usage("--n must be at least 1"));
        }
        if self.s < 2 {
            return Err(Failure::usage("--s must be at least 2"));
        }
        if self.grid_points == 0 {
            return Err(Failure::usage("--grid must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(Failure::usage("--jobs must be positive"));
        }
        self.problem_id()?;
        self.degrees()?;
        Ok(())
    }
}

/// Parses `a,b`.
pub fn parse_class(text: &str) -> Result<[u32; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|_| format!("bad degree `{a}`"))?,
            b.parse().map_err(|_| format!("bad degree `{b}`"))?,
        ]),
        _ => Err(format!("expected `a,b`, got `{text}`")),
    }
}
