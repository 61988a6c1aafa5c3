//! Compact basic semialgebraic sets and the control systems built from them.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::polynomial::{HorizonMode, Monomial, Polynomial, Var, VariableSpace};

const MAX_PROPOSALS: u64 = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// `{z : g_i(z) >= 0, h_j(z) = 0}` over a subset of the variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicSemialgebraicSet {
    pub inequalities: Vec<Polynomial>,
    pub equalities: Vec<Polynomial>,
    /// Variables the set constrains; points are given in this order.
    pub variables: Vec<Var>,
    /// Radius of a ball (in these variables) containing the set.
    pub bounding_radius: f64,
}

impl BasicSemialgebraicSet {
    pub fn new(
        variables: Vec<Var>,
        inequalities: Vec<Polynomial>,
        equalities: Vec<Polynomial>,
        bounding_radius: f64,
    ) -> Result<Self> {
        if !(bounding_radius.is_finite() && bounding_radius > 0.0) {
            return Err(CoreError::Invalid("bounding radius must be finite and positive".into()));
        }
        for g in inequalities.iter().chain(&equalities) {
            if let Some(v) = g.variables().into_iter().find(|v| !variables.contains(v)) {
                return Err(CoreError::Invalid(format!(
                    "set polynomial `{g}` uses undeclared variable `{}`",
                    g.space().name(v)
                )));
            }
        }
        Ok(Self {
            inequalities,
            equalities,
            variables,
            bounding_radius,
        })
    }

    fn norm_sq(space: &Arc<VariableSpace>, vars: &[Var]) -> Polynomial {
        Polynomial::from_terms(
            space,
            vars.iter().map(|&v| (Monomial::from_exponents(&[(v, 2)]), 1.0)),
        )
    }

    /// `{r^2 - |z|^2 >= 0}`
    pub fn ball(space: &Arc<VariableSpace>, vars: &[Var], radius: f64) -> Self {
        let g = Polynomial::constant(space, radius * radius)
            .sub(&Self::norm_sq(space, vars))
            .expect("same space");
        Self::new(vars.to_vec(), vec![g], vec![], radius).expect("valid ball")
    }

    /// `{r^2 - |z|^2 = 0}`
    pub fn sphere(space: &Arc<VariableSpace>, vars: &[Var], radius: f64) -> Self {
        let h = Polynomial::constant(space, radius * radius)
            .sub(&Self::norm_sq(space, vars))
            .expect("same space");
        Self::new(vars.to_vec(), vec![], vec![h], radius).expect("valid sphere")
    }

    /// `{r_out^2 - |z|^2 >= 0, |z|^2 - r_in^2 >= 0}`
    pub fn annulus(space: &Arc<VariableSpace>, vars: &[Var], r_in: f64, r_out: f64) -> Self {
        let n2 = Self::norm_sq(space, vars);
        let outer = Polynomial::constant(space, r_out * r_out).sub(&n2).expect("same space");
        let inner = n2.sub(&Polynomial::constant(space, r_in * r_in)).expect("same space");
        Self::new(vars.to_vec(), vec![outer, inner], vec![], r_out).expect("valid annulus")
    }

    /// The single point `z = at`, as equalities `z_i - at_i = 0`.
    pub fn point(space: &Arc<VariableSpace>, vars: &[Var], at: &[f64]) -> Self {
        let eqs = vars
            .iter()
            .zip(at)
            .map(|(&v, &a)| Polynomial::var(space, v).sub(&Polynomial::constant(space, a)).expect("same space"))
            .collect();
        let r = at.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3) * 1.0001;
        Self::new(vars.to_vec(), vec![], eqs, r).expect("valid point")
    }

    /// `{(v - a)(b - v) >= 0}`
    pub fn interval(space: &Arc<VariableSpace>, v: Var, a: f64, b: f64) -> Self {
        let x = Polynomial::var(space, v);
        let g = x
            .sub(&Polynomial::constant(space, a))
            .and_then(|l| l.mul(&Polynomial::constant(space, b).sub(&x)?))
            .expect("same space");
        Self::new(vec![v], vec![g], vec![], a.abs().max(b.abs())).expect("valid interval")
    }

    /// Cartesian product; variables must be disjoint.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.variables.iter().any(|v| other.variables.contains(v)) {
            return Err(CoreError::Invalid("product of sets sharing variables".into()));
        }
        let mut variables = self.variables.clone();
        variables.extend(&other.variables);
        Self::new(
            variables,
            self.inequalities.iter().chain(&other.inequalities).cloned().collect(),
            self.equalities.iter().chain(&other.equalities).cloned().collect(),
            (self.bounding_radius.powi(2) + other.bounding_radius.powi(2)).sqrt(),
        )
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    fn space(&self) -> Option<&Arc<VariableSpace>> {
        self.inequalities.iter().chain(&self.equalities).next().map(Polynomial::space)
    }

    /// Embeds local coordinates into a full point of the variable space.
    pub fn embed(&self, z: &[f64], dim: usize) -> Vec<f64> {
        let mut full = vec![0.0; dim];
        for (v, val) in self.variables.iter().zip(z) {
            full[*v] = *val;
        }
        full
    }

    /// True iff every `g_i(z) >= -tol` and `|h_j(z)| <= tol`; `z` in set-variable order.
    pub fn contains(&self, z: &[f64], tol: f64) -> Result<bool> {
        if z.len() != self.dim() {
            return Err(CoreError::Dimension {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let Some(space) = self.space() else {
            return Ok(true);
        };
        let full = self.embed(z, space.dim());
        Ok(self.contains_full(&full, tol))
    }

    /// Membership of a full point of the variable space.
    pub fn contains_full(&self, full: &[f64], tol: f64) -> bool {
        self.inequalities.iter().all(|g| g.eval_unchecked(full) >= -tol)
            && self.equalities.iter().all(|h| h.eval_unchecked(full).abs() <= tol)
    }

    /// Largest constraint violation at a full point (0 inside the set).
    pub fn violation_full(&self, full: &[f64]) -> f64 {
        let gi = self.inequalities.iter().map(|g| (-g.eval_unchecked(full)).max(0.0));
        let hj = self.equalities.iter().map(|h| h.eval_unchecked(full).abs());
        gi.chain(hj).fold(0.0, f64::max)
    }

    /// Solves the equalities when they pin down a single point (all affine, square system).
    fn isolated_point(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        if self.equalities.len() != n || self.equalities.iter().any(|h| h.degree() > 1) {
            return None;
        }
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (i, h) in self.equalities.iter().enumerate() {
            for (m, c) in h.terms() {
                match m.exponents() {
                    [] => b[i] = -c,
                    [(v, 1)] => {
                        let k = self.variables.iter().position(|w| w == v)?;
                        a[(i, k)] = c;
                    }
                    _ => return None,
                }
            }
        }
        let sol = a.lu().solve(&b)?;
        Some(sol.iter().copied().collect())
    }

    /// Rejection sampling from the bounding box, driven by `rng`.
    pub fn sample_with<R: Rng>(&self, rng: &mut R, count: usize) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if !self.equalities.is_empty() {
            let p = self.isolated_point().ok_or_else(|| {
                CoreError::Sampling("set with equality constraints has no volume".into())
            })?;
            if !self.contains(&p, 1e-12)? {
                return Err(CoreError::Sampling("inconsistent point set".into()));
            }
            return Ok(vec![p; count]);
        }
        let r = self.bounding_radius;
        let dim = self.space().map(|s| s.dim()).unwrap_or(self.dim());
        let mut out = Vec::with_capacity(count);
        let mut proposals: u64 = 0;
        while out.len() < count {
            let z: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-r..=r)).collect();
            proposals += 1;
            if self.contains_full(&self.embed(&z, dim), 0.0) {
                out.push(z);
            }
            if proposals >= MAX_PROPOSALS && (out.len() as f64) < MIN_ACCEPTANCE * proposals as f64 {
                return Err(CoreError::Sampling(format!(
                    "acceptance rate {} / {proposals} too low for rejection sampling",
                    out.len()
                )));
            }
        }
        Ok(out)
    }

    /// Deterministic rejection sampling seeded by `seed`.
    pub fn sample_uniform(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    pub fn to_spec(&self) -> SetSpec {
        SetSpec {
            inequalities: self.inequalities.iter().map(|p| p.to_string()).collect(),
            equalities: self.equalities.iter().map(|p| p.to_string()).collect(),
            bounding_radius: self.bounding_radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    FixedTime(f64),
    FreeTime,
}

impl Horizon {
    pub fn mode(self) -> HorizonMode {
        match self {
            Horizon::FixedTime(_) => HorizonMode::FixedTime,
            Horizon::FreeTime => HorizonMode::FreeTime,
        }
    }
}

/// `x' = f(x, u)` with `(x, u)` in `X x U`, ending in `X_T`.
#[derive(Clone, Debug)]
pub struct ControlSystem {
    pub name: String,
    pub space: Arc<VariableSpace>,
    pub f: Vec<Polynomial>,
    pub x_set: BasicSemialgebraicSet,
    pub u_set: BasicSemialgebraicSet,
    pub x_terminal: BasicSemialgebraicSet,
    pub horizon: Horizon,
}

impl ControlSystem {
    pub fn new(
        name: impl Into<String>,
        space: Arc<VariableSpace>,
        f: Vec<Polynomial>,
        x_set: BasicSemialgebraicSet,
        u_set: BasicSemialgebraicSet,
        x_terminal: BasicSemialgebraicSet,
        horizon: Horizon,
    ) -> Result<Self> {
        if f.len() != space.n() {
            return Err(CoreError::Dimension {
                expected: space.n(),
                got: f.len(),
            });
        }
        let xu: Vec<Var> = space.state_vars().iter().chain(space.control_vars()).copied().collect();
        for fi in &f {
            if fi.space().as_ref() != space.as_ref() {
                return Err(CoreError::SpaceMismatch);
            }
            if fi.variables().iter().any(|v| !xu.contains(v)) {
                return Err(CoreError::Invalid(format!("dynamics `{fi}` must depend on (x, u) only")));
            }
        }
        let sorted = |v: &[Var]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v
        };
        if sorted(&x_set.variables) != space.state_vars()
            || sorted(&x_terminal.variables) != space.state_vars()
            || sorted(&u_set.variables) != space.control_vars()
        {
            return Err(CoreError::Invalid("X and X_T must be over x, U over u".into()));
        }
        match horizon {
            Horizon::FixedTime(t) => {
                if !(t.is_finite() && t > 0.0) || space.time_var().is_none() {
                    return Err(CoreError::Invalid(
                        "fixed-time problems need T > 0 and a time variable".into(),
                    ));
                }
            }
            Horizon::FreeTime => {
                if space.time_var().is_some() {
                    return Err(CoreError::Invalid("free-time problems have no time variable".into()));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            space,
            f,
            x_set,
            u_set,
            x_terminal,
            horizon,
        })
    }

    pub fn mode(&self) -> HorizonMode {
        self.horizon.mode()
    }

    /// `[0, T]` for fixed-time problems.
    pub fn time_set(&self) -> Option<BasicSemialgebraicSet> {
        match self.horizon {
            Horizon::FixedTime(t) => Some(BasicSemialgebraicSet::interval(
                &self.space,
                self.space.time_var().expect("checked in new"),
                0.0,
                t,
            )),
            Horizon::FreeTime => None,
        }
    }

    /// `f(x, u)` evaluated numerically.
    pub fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let z = self.space.point(0.0, x, u);
        self.f.iter().map(|fi| fi.eval_unchecked(&z)).collect()
    }

    pub fn to_file(&self) -> ProblemFile {
        let names = |vs: &[Var]| vs.iter().map(|&v| self.space.name(v).to_string()).collect();
        ProblemFile {
            name: self.name.clone(),
            state: names(self.space.state_vars()),
            control: names(self.space.control_vars()),
            horizon: self.horizon,
            f: self.f.iter().map(|p| p.to_string()).collect(),
            x_set: self.x_set.to_spec(),
            u_set: self.u_set.to_spec(),
            x_terminal: self.x_terminal.to_spec(),
        }
    }
}

/// Set description inside a problem file; polynomials use the text syntax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSpec {
    #[serde(default)]
    pub inequalities: Vec<String>,
    #[serde(default)]
    pub equalities: Vec<String>,
    pub bounding_radius: f64,
}

impl SetSpec {
    pub fn build(&self, space: &Arc<VariableSpace>, vars: &[Var]) -> Result<BasicSemialgebraicSet> {
        let parse = |list: &[String]| -> Result<Vec<Polynomial>> {
            list.iter().map(|s| Polynomial::parse(space, s)).collect()
        };
        BasicSemialgebraicSet::new(
            vars.to_vec(),
            parse(&self.inequalities)?,
            parse(&self.equalities)?,
            self.bounding_radius,
        )
    }
}

/// JSON description of a custom control system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub state: Vec<String>,
    pub control: Vec<String>,
    pub horizon: Horizon,
    pub f: Vec<String>,
    pub x_set: SetSpec,
    pub u_set: SetSpec,
    pub x_terminal: SetSpec,
}

const MAX_PROBLEM_VARS: usize = 16;

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<ControlSystem> {
        if self.state.len() + self.control.len() > MAX_PROBLEM_VARS {
            return Err(CoreError::Invalid("too many variables".into()));
        }
        let s: Vec<&str> = self.state.iter().map(String::as_str).collect();
        let c: Vec<&str> = self.control.iter().map(String::as_str).collect();
        let time = matches!(self.horizon, Horizon::FixedTime(_)).then_some("t");
        let space = VariableSpace::with_names(time, &s, &c)?;
        let f = self
            .f
            .iter()
            .map(|t| Polynomial::parse(&space, t))
            .collect::<Result<Vec<_>>>()?;
        let xs = space.state_vars().to_vec();
        let us = space.control_vars().to_vec();
        ControlSystem::new(
            self.name.clone(),
            space.clone(),
            f,
            self.x_set.build(&space, &xs)?,
            self.u_set.build(&space, &us)?,
            self.x_terminal.build(&space, &xs)?,
            self.horizon,
        )
    }
}
