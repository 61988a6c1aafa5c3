//! Benchmark control problems with known optimal laws and their trajectory generators.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::polynomial::{Polynomial, VariableSpace};
use crate::semialgebraic::{BasicSemialgebraicSet, ControlSystem, Horizon};
use crate::trajectory::{TrajectoryDatabase, TrajectorySample};

/// Default number of samples per trajectory.
pub const DEFAULT_SAMPLES: usize = 50;
/// Radius of the compact control set used for the LQ problem.
pub const LQ_CONTROL_RADIUS: f64 = 2.0;
/// LQ initial states are drawn from this ball so trajectories stay in the unit ball.
pub const LQ_START_RADIUS: f64 = 0.9;
pub const RICCATI_STEPS: usize = 2000;
/// Share of planar trajectories in the mixed Brockett database.
pub const BROCKETT_PLANAR_FRACTION: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Benchmark {
    Lq,
    ExitNorm,
    ExitTime,
    Plp(u32),
    Brockett,
}

impl FromStr for Benchmark {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lq" => Benchmark::Lq,
            "exitnorm" => Benchmark::ExitNorm,
            "exittime" => Benchmark::ExitTime,
            "brockett" => Benchmark::Brockett,
            _ => match s.strip_prefix("plp") {
                Some(p) => Benchmark::Plp(
                    p.trim_matches(|c| c == '(' || c == ')')
                        .parse()
                        .map_err(|_| CoreError::Invalid(format!("bad plp order in `{s}`")))?,
                ),
                None => return Err(CoreError::Invalid(format!("unknown problem `{s}`"))),
            },
        })
    }
}

impl TryFrom<String> for Benchmark {
    type Error = CoreError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Benchmark> for String {
    fn from(b: Benchmark) -> String {
        b.to_string()
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Lq => f.write_str("lq"),
            Benchmark::ExitNorm => f.write_str("exitnorm"),
            Benchmark::ExitTime => f.write_str("exittime"),
            Benchmark::Plp(p) => write!(f, "plp{p}"),
            Benchmark::Brockett => f.write_str("brockett"),
        }
    }
}

/// Start-state region for the exit-time family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Region {
    Ball,
    /// `B2` minus the open ball of the given radius.
    Annulus(f64),
}

/// Parses `ball` or `annulus:r`.
impl FromStr for Region {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ball" {
            return Ok(Region::Ball);
        }
        let r = s
            .strip_prefix("annulus")
            .map(|r| r.trim_start_matches(':'))
            .map(|r| if r.is_empty() { Ok(0.5) } else { r.parse::<f64>() });
        match r {
            Some(Ok(r)) if r > 0.0 && r < 1.0 => Ok(Region::Annulus(r)),
            _ => Err(CoreError::Invalid(format!("bad region `{s}` (ball | annulus:r with 0 < r < 1)"))),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Ball => f.write_str("ball"),
            Region::Annulus(r) => write!(f, "annulus:{r}"),
        }
    }
}

impl TryFrom<String> for Region {
    type Error = CoreError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Region> for String {
    fn from(r: Region) -> String {
        r.to_string()
    }
}

impl Region {
    pub fn describe(self) -> String {
        match self {
            Region::Ball => "B2".into(),
            Region::Annulus(r) => format!("B2 \\ {r}B2"),
        }
    }

    fn set(self, space: &std::sync::Arc<VariableSpace>) -> BasicSemialgebraicSet {
        let xs = space.state_vars();
        match self {
            Region::Ball => BasicSemialgebraicSet::ball(space, xs, 1.0),
            Region::Annulus(r) => BasicSemialgebraicSet::annulus(space, xs, r, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BrockettSubcase {
    Planar,
    Axis,
    /// Each trajectory is planar with the given probability, otherwise axis.
    Mixture(f64),
}

impl Benchmark {
    pub fn system(self) -> ControlSystem {
        match self {
            Benchmark::Lq => lq_system(),
            Benchmark::ExitNorm | Benchmark::ExitTime | Benchmark::Plp(_) => exit_system(self),
            Benchmark::Brockett => brockett_system(),
        }
    }

    /// The Lagrangian the generated trajectories are optimal for, as text.
    pub fn target_lagrangian(self) -> String {
        match self {
            Benchmark::Lq => "2*x1^2 + 0.5*x1*x2 + x2^2 + u^2".into(),
            Benchmark::ExitNorm => "x1^2 + x2^2 + u1^2 + u2^2".into(),
            Benchmark::ExitTime | Benchmark::Brockett | Benchmark::Plp(0) => "1".into(),
            Benchmark::Plp(2) => "x1^2 + x2^2".into(),
            Benchmark::Plp(p) => format!("|x|^{p}"),
        }
    }

    /// Polynomial target when the intended Lagrangian is polynomial in this space.
    pub fn target_polynomial(self, sys: &ControlSystem) -> Option<Polynomial> {
        match self {
            Benchmark::Plp(p) if p % 2 == 1 => None,
            Benchmark::Plp(p) => {
                let n2 = Polynomial::parse(&sys.space, "x1^2 + x2^2").ok()?;
                Some(n2.pow(p / 2))
            }
            _ => Polynomial::parse(&sys.space, &self.target_lagrangian()).ok(),
        }
    }
}

fn p(space: &std::sync::Arc<VariableSpace>, text: &str) -> Polynomial {
    Polynomial::parse(space, text).expect("benchmark polynomial")
}

/// `x' = (x2, u)` on `[0, 1]`, `X = B2`, `U = 2B1`, free terminal state (`X_T = X`).
pub fn lq_system() -> ControlSystem {
    let space = VariableSpace::new(2, 1, true).expect("valid space");
    let xs = space.state_vars().to_vec();
    let us = space.control_vars().to_vec();
    ControlSystem::new(
        "lq",
        space.clone(),
        vec![p(&space, "x2"), p(&space, "u")],
        BasicSemialgebraicSet::ball(&space, &xs, 1.0),
        BasicSemialgebraicSet::ball(&space, &us, LQ_CONTROL_RADIUS),
        BasicSemialgebraicSet::ball(&space, &xs, 1.0),
        Horizon::FixedTime(1.0),
    )
    .expect("valid LQ system")
}

/// `x' = u`, `X = U = B2`, `X_T` the unit circle, free final time.
fn exit_system(b: Benchmark) -> ControlSystem {
    let space = VariableSpace::new(2, 2, false).expect("valid space");
    let xs = space.state_vars().to_vec();
    let us = space.control_vars().to_vec();
    ControlSystem::new(
        b.to_string(),
        space.clone(),
        vec![p(&space, "u1"), p(&space, "u2")],
        BasicSemialgebraicSet::ball(&space, &xs, 1.0),
        BasicSemialgebraicSet::ball(&space, &us, 1.0),
        BasicSemialgebraicSet::sphere(&space, &xs, 1.0),
        Horizon::FreeTime,
    )
    .expect("valid exit system")
}

/// `x' = (u1, u2, x2 u1 - x1 u2)`, `X = 3B3`, `U = B2`, `X_T = {0}`.
pub fn brockett_system() -> ControlSystem {
    let space = VariableSpace::new(3, 2, false).expect("valid space");
    let xs = space.state_vars().to_vec();
    let us = space.control_vars().to_vec();
    ControlSystem::new(
        "brockett",
        space.clone(),
        vec![p(&space, "u1"), p(&space, "u2"), p(&space, "x2*u1 - x1*u2")],
        BasicSemialgebraicSet::ball(&space, &xs, 3.0),
        BasicSemialgebraicSet::ball(&space, &us, 1.0),
        BasicSemialgebraicSet::point(&space, &xs, &[0.0; 3]),
        Horizon::FreeTime,
    )
    .expect("valid Brockett system")
}

// ---------------------------------------------------------------------------
// LQ

/// `P(t)` of the LQ problem (the value function is `x^T P x`, so `E = -P`).
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    pub t_final: f64,
    step: f64,
    /// `(p11, p12, p22)` on the grid.
    values: Vec<[f64; 3]>,
    derivs: Vec<[f64; 3]>,
}

const LQ_Q: [f64; 3] = [2.0, 0.25, 1.0];

fn riccati_rhs(p: [f64; 3]) -> [f64; 3] {
    // -P' = A^T P + P A - P B B^T P + Q with A = [[0,1],[0,0]], B = (0,1)^T, R = 1
    let [p11, p12, p22] = p;
    [
        -(LQ_Q[0] - p12 * p12),
        -(LQ_Q[1] + p11 - p12 * p22),
        -(LQ_Q[2] + 2.0 * p12 - p22 * p22),
    ]
}

fn add3(a: [f64; 3], b: [f64; 3], k: f64) -> [f64; 3] {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
}

impl RiccatiSolution {
    /// Backward RK4 from `P(T) = 0` on `steps` uniform steps.
    pub fn solve(t_final: f64, steps: usize) -> Self {
        let h = t_final / steps as f64;
        let mut values = vec![[0.0; 3]; steps + 1];
        let mut p = [0.0; 3];
        for k in (0..steps).rev() {
            let k1 = riccati_rhs(p);
            let k2 = riccati_rhs(add3(p, k1, -h / 2.0));
            let k3 = riccati_rhs(add3(p, k2, -h / 2.0));
            let k4 = riccati_rhs(add3(p, k3, -h));
            for i in 0..3 {
                p[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            values[k] = p;
        }
        let derivs = values.iter().map(|v| riccati_rhs(*v)).collect();
        Self {
            t_final,
            step: h,
            values,
            derivs,
        }
    }

    /// Cubic Hermite interpolation of `P` at `t`.
    pub fn p_at(&self, t: f64) -> [f64; 3] {
        let t = t.clamp(0.0, self.t_final);
        let n = self.values.len() - 1;
        let k = ((t / self.step).floor() as usize).min(n - 1);
        let s = (t - k as f64 * self.step) / self.step;
        let (h00, h10, h01, h11) = (
            2.0 * s.powi(3) - 3.0 * s * s + 1.0,
            s.powi(3) - 2.0 * s * s + s,
            -2.0 * s.powi(3) + 3.0 * s * s,
            s.powi(3) - s * s,
        );
        let (a, b, da, db) = (self.values[k], self.values[k + 1], self.derivs[k], self.derivs[k + 1]);
        std::array::from_fn(|i| h00 * a[i] + h10 * self.step * da[i] + h01 * b[i] + h11 * self.step * db[i])
    }

    /// Optimal feedback `u = -B^T P(t) x`.
    pub fn control(&self, t: f64, x: &[f64]) -> f64 {
        let [_, p12, p22] = self.p_at(t);
        -(p12 * x[0] + p22 * x[1])
    }

    /// Value function `x^T P(t) x`.
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let [p11, p12, p22] = self.p_at(t);
        p11 * x[0] * x[0] + 2.0 * p12 * x[0] * x[1] + p22 * x[1] * x[1]
    }
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

fn uniform_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        if z.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            return z;
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sample times `0 = t_0 < ... < t_{s-1} = duration`, or a single time for zero duration.
fn sample_times(t0: f64, duration: f64, s: usize) -> Vec<f64> {
    if duration <= 0.0 || s < 2 {
        return vec![t0];
    }
    (0..s).map(|k| t0 + duration * k as f64 / (s - 1) as f64).collect()
}

fn lq_trajectory(ric: &RiccatiSolution, rng: &mut ChaCha8Rng, s: usize) -> Vec<TrajectorySample> {
    loop {
        let t0 = rng.gen_range(0.0..1.0);
        let x0 = uniform_in_ball(rng, 2, LQ_START_RADIUS);
        let times = sample_times(t0, 1.0 - t0, s);
        let f = |t: f64, x: [f64; 2]| [x[1], ric.control(t, &x)];
        let mut x = [x0[0], x0[1]];
        let mut out = Vec::with_capacity(times.len());
        let mut ok = true;
        for (k, &t) in times.iter().enumerate() {
            if k > 0 {
                let t_prev = times[k - 1];
                let sub = ((t - t_prev) / 1e-3).ceil().max(1.0) as usize;
                let h = (t - t_prev) / sub as f64;
                let mut tt = t_prev;
                for _ in 0..sub {
                    let k1 = f(tt, x);
                    let k2 = f(tt + h / 2.0, [x[0] + h / 2.0 * k1[0], x[1] + h / 2.0 * k1[1]]);
                    let k3 = f(tt + h / 2.0, [x[0] + h / 2.0 * k2[0], x[1] + h / 2.0 * k2[1]]);
                    let k4 = f(tt + h, [x[0] + h * k3[0], x[1] + h * k3[1]]);
                    for i in 0..2 {
                        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                    tt += h;
                }
            }
            let u = ric.control(t, &x);
            if norm(&x) > 1.0 || u.abs() > LQ_CONTROL_RADIUS {
                ok = false;
                break;
            }
            out.push(TrajectorySample {
                t,
                x: x.to_vec(),
                u: vec![u],
                is_terminal: k + 1 == times.len(),
            });
        }
        if ok {
            return out;
        }
    }
}

/// LQ trajectories under the Riccati feedback from random `(t0, x0)`.
pub fn gen_lq(n: usize, s: usize, seed: u64) -> TrajectoryDatabase {
    let ric = RiccatiSolution::solve(1.0, RICCATI_STEPS);
    let trajectories = (0..n)
        .into_par_iter()
        .map(|i| lq_trajectory(&ric, &mut rng_for(seed, i), s))
        .collect();
    TrajectoryDatabase {
        problem: Benchmark::Lq.to_string(),
        seed,
        samples_per_trajectory: s,
        sample_region: format!("[0,1] x {LQ_START_RADIUS}B2"),
        intended_lagrangian: Some(Benchmark::Lq.target_lagrangian()),
        intended_value_function: Some("x^T P(t) x (Riccati)".into()),
        trajectories,
    }
}

// ---------------------------------------------------------------------------
// exit problems

fn exitnorm_trajectory(rng: &mut ChaCha8Rng, s: usize) -> Vec<TrajectorySample> {
    let x0 = loop {
        let x = uniform_in_ball(rng, 2, 1.0);
        if norm(&x) > 1e-6 {
            break x;
        }
    };
    let r0 = norm(&x0);
    let duration = -r0.ln();
    let times = sample_times(0.0, duration, s);
    let last = times.len() - 1;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let x: Vec<f64> = if k == last {
                x0.iter().map(|v| v / r0).collect()
            } else {
                x0.iter().map(|v| v * t.exp()).collect()
            };
            TrajectorySample {
                t,
                u: x.clone(),
                x,
                is_terminal: k == last,
            }
        })
        .collect()
}

/// Minimum exit-norm trajectories `x(t) = x0 e^t` with `u = x`.
pub fn gen_exitnorm(n: usize, s: usize, seed: u64) -> TrajectoryDatabase {
    let trajectories = (0..n)
        .into_par_iter()
        .map(|i| exitnorm_trajectory(&mut rng_for(seed, i), s))
        .collect();
    TrajectoryDatabase {
        problem: Benchmark::ExitNorm.to_string(),
        seed,
        samples_per_trajectory: s,
        sample_region: Region::Ball.describe(),
        intended_lagrangian: Some(Benchmark::ExitNorm.target_lagrangian()),
        intended_value_function: Some("1 - x1^2 - x2^2".into()),
        trajectories,
    }
}

fn exittime_trajectory(rng: &mut ChaCha8Rng, s: usize, region: &BasicSemialgebraicSet) -> Result<Vec<TrajectorySample>> {
    let x0 = loop {
        let x = region.sample_with(rng, 1)?.remove(0);
        if norm(&x) > 1e-6 {
            break x;
        }
    };
    let r0 = norm(&x0);
    let u: Vec<f64> = x0.iter().map(|v| v / r0).collect();
    let times = sample_times(0.0, 1.0 - r0, s);
    let last = times.len() - 1;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let x = if k == last {
                u.clone()
            } else {
                x0.iter().zip(&u).map(|(a, b)| a + t * b).collect()
            };
            TrajectorySample {
                t,
                x,
                u: u.clone(),
                is_terminal: k == last,
            }
        })
        .collect())
}

/// Minimum exit-time trajectories: straight radial lines at unit speed.
pub fn gen_exittime(n: usize, s: usize, seed: u64, region: Region) -> Result<TrajectoryDatabase> {
    let space = VariableSpace::new(2, 2, false)?;
    let set = region.set(&space);
    let trajectories = (0..n)
        .into_par_iter()
        .map(|i| exittime_trajectory(&mut rng_for(seed, i), s, &set))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryDatabase {
        problem: Benchmark::ExitTime.to_string(),
        seed,
        samples_per_trajectory: s,
        sample_region: region.describe(),
        intended_lagrangian: Some(Benchmark::ExitTime.target_lagrangian()),
        intended_value_function: Some("1 - |x|".into()),
        trajectories,
    })
}

/// The `(P)_{L_p}` family: exit-time trajectories labeled with `L_p = |x|^p`.
pub fn gen_plp(p: u32, n: usize, s: usize, seed: u64, region: Region) -> Result<TrajectoryDatabase> {
    let mut db = gen_exittime(n, s, seed, region)?;
    db.problem = Benchmark::Plp(p).to_string();
    db.intended_lagrangian = Some(Benchmark::Plp(p).target_lagrangian());
    db.intended_value_function = Some(format!("1/{} (1 - |x|^{})", p + 1, p + 1));
    Ok(db)
}

// ---------------------------------------------------------------------------
// Brockett integrator

/// Radius of the disk planar start states are drawn from.
pub const BROCKETT_PLANAR_RADIUS: f64 = 3.0;
/// Axis start heights `|c|` are drawn from this interval.
pub const BROCKETT_AXIS_RANGE: (f64, f64) = (0.5, 2.0);

fn brockett_planar(rng: &mut ChaCha8Rng, s: usize) -> Vec<TrajectorySample> {
    let xy = loop {
        let z = uniform_in_ball(rng, 2, BROCKETT_PLANAR_RADIUS);
        if norm(&z) > 1e-3 {
            break z;
        }
    };
    let r = norm(&xy);
    let u = vec![-xy[0] / r, -xy[1] / r];
    let times = sample_times(0.0, r, s);
    let last = times.len() - 1;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let x = if k == last {
                vec![0.0; 3]
            } else {
                vec![xy[0] + t * u[0], xy[1] + t * u[1], 0.0]
            };
            TrajectorySample {
                t,
                x,
                u: u.clone(),
                is_terminal: k == last,
            }
        })
        .collect()
}

fn brockett_axis(rng: &mut ChaCha8Rng, s: usize) -> Vec<TrajectorySample> {
    let (lo, hi) = BROCKETT_AXIS_RANGE;
    let c = rng.gen_range(lo..hi) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let theta = rng.gen_range(0.0..2.0 * PI);
    // one full circle encloses area pi / w^2 and lowers |x3| by 2 pi / w^2
    let w = c.signum() * (2.0 * PI / c.abs()).sqrt();
    let duration = 2.0 * PI / w.abs();
    let times = sample_times(0.0, duration, s);
    let last = times.len() - 1;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let ph = w * t + theta;
            let x = if k == last {
                vec![0.0; 3]
            } else {
                vec![
                    (ph.sin() - theta.sin()) / w,
                    (theta.cos() - ph.cos()) / w,
                    c + ((w * t).sin() / w - t) / w,
                ]
            };
            TrajectorySample {
                t,
                x,
                u: vec![ph.cos(), ph.sin()],
                is_terminal: k == last,
            }
        })
        .collect()
}

/// Minimum-time Brockett trajectories from the two analytic subcases.
pub fn gen_brockett(n: usize, s: usize, seed: u64, subcase: BrockettSubcase) -> TrajectoryDatabase {
    let trajectories = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let planar = match subcase {
                BrockettSubcase::Planar => true,
                BrockettSubcase::Axis => false,
                BrockettSubcase::Mixture(f) => rng.gen_bool(f.clamp(0.0, 1.0)),
            };
            if planar {
                brockett_planar(&mut rng, s)
            } else {
                brockett_axis(&mut rng, s)
            }
        })
        .collect();
    let region = match subcase {
        BrockettSubcase::Planar => format!("planar: {BROCKETT_PLANAR_RADIUS}B2 x {{0}}"),
        BrockettSubcase::Axis => format!("axis: (0, 0, c), {} <= |c| <= {}", BROCKETT_AXIS_RANGE.0, BROCKETT_AXIS_RANGE.1),
        BrockettSubcase::Mixture(f) => format!("mixture: planar share {f}"),
    };
    TrajectoryDatabase {
        problem: Benchmark::Brockett.to_string(),
        seed,
        samples_per_trajectory: s,
        sample_region: region,
        intended_lagrangian: Some(Benchmark::Brockett.target_lagrangian()),
        intended_value_function: None,
        trajectories,
    }
}

/// Generates the database of a benchmark with its default region settings.
pub fn generate(b: Benchmark, n: usize, s: usize, seed: u64, region: Region) -> Result<TrajectoryDatabase> {
    Ok(match b {
        Benchmark::Lq => gen_lq(n, s, seed),
        Benchmark::ExitNorm => gen_exitnorm(n, s, seed),
        Benchmark::ExitTime => gen_exittime(n, s, seed, region)?,
        Benchmark::Plp(p) => gen_plp(p, n, s, seed, region)?,
        Benchmark::Brockett => gen_brockett(n, s, seed, BrockettSubcase::Mixture(BROCKETT_PLANAR_FRACTION)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_ids_round_trip() {
        for b in [Benchmark::Lq, Benchmark::ExitNorm, Benchmark::ExitTime, Benchmark::Plp(3), Benchmark::Brockett] {
            assert_eq!(b.to_string().parse::<Benchmark>().unwrap(), b);
        }
        assert!("plpx".parse::<Benchmark>().is_err());
        assert!("foo".parse::<Benchmark>().is_err());
    }

    #[test]
    fn riccati_terminal_condition() {
        let r = RiccatiSolution::solve(1.0, RICCATI_STEPS);
        assert!(r.p_at(1.0).iter().all(|v| v.abs() < 1e-12));
        assert!(r.control(1.0, &[0.5, -0.3]).abs() < 1e-12);
        // P stays positive definite before T
        let [a, b, c] = r.p_at(0.0);
        assert!(a > 0.0 && a * c - b * b > 0.0);
    }

    #[test]
    fn empty_databases() {
        assert!(gen_lq(0, 10, 1).trajectories.is_empty());
        assert!(gen_exitnorm(0, 10, 1).trajectories.is_empty());
    }
}
