//! Sparse multivariate polynomials over a fixed, named variable space.
//!
//! Every polynomial of one problem shares an [`Arc<VariableSpace>`] listing
//! `t` (optional), the states `x1..xn` and the controls `u1..um` in that
//! order. Monomials are compared in graded order: total degree first, then
//! lexicographically with earlier variables first, so the degree-2 basis in
//! `(x1, x2)` reads `x1^2, x1*x2, x2^2`.

mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub use parse::parse_polynomial;

/// Index of a variable in its [`VariableSpace`].
pub type Var = usize;

/// Coefficients with smaller magnitude are removed after every operation.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpace {
    names: Vec<String>,
    time: Option<Var>,
    state: Vec<Var>,
    control: Vec<Var>,
}

impl VariableSpace {
    /// Standard naming: `t`, `x1..xn`, `u1..um` (a single control is called `u`).
    pub fn new(n: usize, m: usize, with_time: bool) -> Result<Arc<Self>> {
        let states: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let controls: Vec<String> = if m == 1 {
            vec!["u".to_string()]
        } else {
            (1..=m).map(|i| format!("u{i}")).collect()
        };
        let s: Vec<&str> = states.iter().map(String::as_str).collect();
        let c: Vec<&str> = controls.iter().map(String::as_str).collect();
        Self::with_names(with_time.then_some("t"), &s, &c)
    }

    pub fn with_names(time: Option<&str>, state: &[&str], control: &[&str]) -> Result<Arc<Self>> {
        if state.is_empty() || control.is_empty() {
            return Err(CoreError::Invalid(
                "a variable space needs at least one state and one control".into(),
            ));
        }
        let mut names = Vec::new();
        let time = time.map(|t| {
            names.push(t.to_string());
            0
        });
        let state_vars = (0..state.len()).map(|i| i + names.len()).collect();
        names.extend(state.iter().map(|s| s.to_string()));
        let control_vars = (0..control.len()).map(|i| i + names.len()).collect();
        names.extend(control.iter().map(|s| s.to_string()));
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(CoreError::Invalid("variable names must be distinct".into()));
        }
        for n in &names {
            let ok = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(CoreError::Invalid(format!("bad variable name `{n}`")));
            }
        }
        Ok(Arc::new(Self {
            names,
            time,
            state: state_vars,
            control: control_vars,
        }))
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name)
    }

    pub fn time_var(&self) -> Option<Var> {
        self.time
    }

    pub fn state_vars(&self) -> &[Var] {
        &self.state
    }

    pub fn control_vars(&self) -> &[Var] {
        &self.control
    }

    pub fn n(&self) -> usize {
        self.state.len()
    }

    pub fn m(&self) -> usize {
        self.control.len()
    }

    /// Full point `(t, x, u)` in space order; `t` is ignored without a time variable.
    pub fn point(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        if let Some(tv) = self.time {
            z[tv] = t;
        }
        for (v, val) in self.state.iter().zip(x) {
            z[*v] = *val;
        }
        for (v, val) in self.control.iter().zip(u) {
            z[*v] = *val;
        }
        z
    }
}

/// Product of variable powers, stored sparsely as sorted `(var, exponent)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Self(vec![(v, 1)])
    }

    /// Builds a monomial, merging repeated variables and dropping zero exponents.
    pub fn from_exponents(exps: &[(Var, u32)]) -> Self {
        let mut acc: BTreeMap<Var, u32> = BTreeMap::new();
        for &(v, e) in exps {
            *acc.entry(v).or_insert(0) += e;
        }
        Self(acc.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn exponents(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(&(va, ea)), Some(&(vb, eb))) if va == vb => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
                (Some(&(va, ea)), Some(&(vb, _))) if va < vb => {
                    out.push((va, ea));
                    i += 1;
                }
                (Some(_), Some(&(vb, eb))) => {
                    out.push((vb, eb));
                    j += 1;
                }
                (Some(&x), None) => {
                    out.push(x);
                    i += 1;
                }
                (None, Some(&y)) => {
                    out.push(y);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Self(out)
    }

    /// `d/dv` as `(factor, monomial)`, or `None` when `v` does not occur.
    pub fn derivative(&self, v: Var) -> Option<(u32, Self)> {
        let k = self.0.iter().position(|(w, _)| *w == v)?;
        let e = self.0[k].1;
        let mut rest = self.0.clone();
        if e == 1 {
            rest.remove(k);
        } else {
            rest[k].1 = e - 1;
        }
        Some((e, Self(rest)))
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.0.iter().map(|&(v, e)| z[v].powi(e as i32)).product()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.0.iter().any(|(w, _)| *w == v)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }

    /// Removes variable `v`, returning its exponent.
    pub fn without(&self, v: Var) -> (u32, Self) {
        let e = self.exponent(v);
        (e, Self(self.0.iter().copied().filter(|(w, _)| *w != v).collect()))
    }

    pub fn render(&self, space: &VariableSpace) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    space.name(v).to_string()
                } else {
                    format!("{}^{e}", space.name(v))
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Lexicographic comparison of the dense exponent vectors.
fn dense_lex(a: &[(Var, u32)], b: &[(Var, u32)]) -> Ordering {
    let mut ia = a.iter();
    let mut ib = b.iter();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&(va, ea)), Some(&(vb, eb))) => {
                if va != vb {
                    // the side with the earlier variable has a positive entry where the other has 0
                    return if va < vb { Ordering::Greater } else { Ordering::Less };
                }
                if ea != eb {
                    return ea.cmp(&eb);
                }
            }
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| dense_lex(&other.0, &self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonMode {
    FixedTime,
    FreeTime,
}

#[derive(Clone, Debug)]
pub struct Polynomial {
    space: Arc<VariableSpace>,
    terms: BTreeMap<Monomial, f64>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        *self.space == *other.space && self.terms == other.terms
    }
}

impl Polynomial {
    pub fn zero(space: &Arc<VariableSpace>) -> Self {
        Self {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<VariableSpace>, c: f64) -> Self {
        Self::from_terms(space, [(Monomial::one(), c)])
    }

    pub fn var(space: &Arc<VariableSpace>, v: Var) -> Self {
        Self::from_terms(space, [(Monomial::var(v), 1.0)])
    }

    pub fn monomial(space: &Arc<VariableSpace>, m: Monomial, c: f64) -> Self {
        Self::from_terms(space, [(m, c)])
    }

    /// Sums repeated monomials and drops coefficients below [`DROP_TOL`].
    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(space: &Arc<VariableSpace>, terms: I) -> Self {
        let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            *acc.entry(m).or_insert(0.0) += c;
        }
        acc.retain(|_, c| c.abs() >= DROP_TOL);
        Self {
            space: space.clone(),
            terms: acc,
        }
    }

    pub fn space(&self) -> &Arc<VariableSpace> {
        &self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Degree in the listed variables only.
    pub fn degree_in(&self, vars: &[Var]) -> u32 {
        self.terms
            .keys()
            .map(|m| m.exponents().iter().filter(|(v, _)| vars.contains(v)).map(|(_, e)| e).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.depends_on(v))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(CoreError::SpaceMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_terms(
            &self.space,
            self.terms().chain(other.terms()).map(|(m, c)| (m.clone(), c)),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_terms(
            &self.space,
            self.terms()
                .map(|(m, c)| (m.clone(), c))
                .chain(other.terms().map(|(m, c)| (m.clone(), -c))),
        ))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        Ok(Self::from_terms(&self.space, acc))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_terms(&self.space, self.terms().map(|(m, c)| (m.clone(), k * c)))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(&self.space, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same space");
        }
        out
    }

    pub fn differentiate(&self, v: Var) -> Result<Self> {
        if v >= self.space.dim() {
            return Err(CoreError::UnknownVariable(format!("#{v}")));
        }
        Ok(Self::from_terms(
            &self.space,
            self.terms
                .iter()
                .filter_map(|(m, c)| m.derivative(v).map(|(e, d)| (d, c * e as f64))),
        ))
    }

    /// Evaluates at a full point given in space order.
    pub fn evaluate(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.space.dim() {
            return Err(CoreError::Dimension {
                expected: self.space.dim(),
                got: z.len(),
            });
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(z)).sum()
    }

    /// Evaluates with a partial assignment, which must cover every occurring variable.
    pub fn evaluate_at(&self, assignment: &BTreeMap<Var, f64>) -> Result<f64> {
        let mut z = vec![0.0; self.space.dim()];
        for v in self.variables() {
            z[v] = *assignment
                .get(&v)
                .ok_or_else(|| CoreError::MissingVariable(self.space.name(v).to_string()))?;
        }
        Ok(self.eval_unchecked(&z))
    }

    /// Substitutes `v = value`, leaving a polynomial free of `v`.
    pub fn substitute(&self, v: Var, value: f64) -> Self {
        Self::from_terms(
            &self.space,
            self.terms.iter().map(|(m, c)| {
                let (e, rest) = m.without(v);
                (rest, c * value.powi(e as i32))
            }),
        )
    }

    /// Coefficient vector in the listed basis; terms outside the basis are ignored.
    pub fn coefficients_in(&self, basis: &MonomialBasis) -> Vec<f64> {
        basis.elements.iter().map(|m| self.coefficient(m)).collect()
    }

    pub fn parse(space: &Arc<VariableSpace>, text: &str) -> Result<Self> {
        parse_polynomial(space, text)
    }
}

fn fmt_coef(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if k == 0 {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_one() {
                f.write_str(&fmt_coef(mag))?;
            } else if mag == 1.0 {
                f.write_str(&m.render(&self.space))?;
            } else {
                write!(f, "{}*{}", fmt_coef(mag), m.render(&self.space))?;
            }
        }
        Ok(())
    }
}

/// All monomials of total degree `<= degree` in `vars`, in graded order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    pub vars: Vec<Var>,
    pub degree: u32,
    pub elements: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.elements.binary_search(m).ok()
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        self.elements.iter().map(|m| m.eval(z)).collect()
    }
}

pub fn monomial_basis(vars: &[Var], degree: u32) -> MonomialBasis {
    let mut vars: Vec<Var> = vars.to_vec();
    vars.sort_unstable();
    vars.dedup();
    let mut elements = Vec::new();
    let mut exps = vec![0u32; vars.len()];
    fn rec(k: usize, left: u32, vars: &[Var], exps: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if k == vars.len() {
            let pairs: Vec<(Var, u32)> = vars.iter().copied().zip(exps.iter().copied()).collect();
            out.push(Monomial::from_exponents(&pairs));
            return;
        }
        for e in 0..=left {
            exps[k] = e;
            rec(k + 1, left - e, vars, exps, out);
        }
        exps[k] = 0;
    }
    rec(0, degree, &vars, &mut exps, &mut elements);
    elements.sort();
    MonomialBasis {
        vars,
        degree,
        elements,
    }
}

/// `binom(n + d, d)`, the size of a degree-`d` basis in `n` variables.
pub fn basis_len(n: usize, d: u32) -> usize {
    let d = d as usize;
    let mut num: u128 = 1;
    for i in 0..d {
        num = num * (n + d - i) as u128 / (i as u128 + 1);
    }
    num as usize
}

/// `H_f(L, phi) = L + dphi/dt + grad_x(phi) . f`.
pub fn hjb_operator(l: &Polynomial, phi: &Polynomial, f: &[Polynomial], mode: HorizonMode) -> Result<Polynomial> {
    let space = l.space().clone();
    phi.check(l)?;
    if f.len() != space.n() {
        return Err(CoreError::Dimension {
            expected: space.n(),
            got: f.len(),
        });
    }
    let mut out = l.clone();
    if let Some(t) = space.time_var() {
        match mode {
            HorizonMode::FixedTime => out = out.add(&phi.differentiate(t)?)?,
            HorizonMode::FreeTime => {
                if phi.depends_on(t) {
                    return Err(CoreError::TimeDependentPhi);
                }
            }
        }
    }
    for (i, &x) in space.state_vars().iter().enumerate() {
        f[i].check(l)?;
        let d = phi.differentiate(x)?;
        if !d.is_zero() {
            out = out.add(&d.mul(&f[i])?)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> Arc<VariableSpace> {
        VariableSpace::new(2, 2, false).unwrap()
    }

    fn p(s: &Arc<VariableSpace>, text: &str) -> Polynomial {
        Polynomial::parse(s, text).unwrap()
    }

    #[test]
    fn graded_order_of_small_basis() {
        let b = monomial_basis(&[0, 1], 2);
        let s = space();
        let names: Vec<String> = b.elements.iter().map(|m| m.render(&s)).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
    }

    #[test]
    fn basis_sizes_match_binomials() {
        assert_eq!(monomial_basis(&[0, 1], 1).len(), 3);
        assert_eq!(monomial_basis(&[2, 3], 0).len(), 1);
        assert_eq!(monomial_basis(&[0, 1, 2], 2).len(), 10);
        for n in 1..5 {
            for d in 0..6 {
                let vars: Vec<Var> = (0..n).collect();
                assert_eq!(monomial_basis(&vars, d).len(), basis_len(n, d));
            }
        }
    }

    #[test]
    fn addition_examples() {
        let s = space();
        assert!(p(&s, "x1^2 + 1").add(&p(&s, "-x1^2")).unwrap() == p(&s, "1"));
        let q = p(&s, "2*x1^2 + 0.5*x1*x2");
        assert_eq!(q.add(&Polynomial::zero(&s)).unwrap(), q);
        let sum = q.add(&p(&s, "x2^2 + u1^2")).unwrap();
        assert_eq!(sum.to_string(), "2*x1^2 + 0.5*x1*x2 + x2^2 + u1^2");
    }

    #[test]
    fn product_of_conserved_quantity() {
        let s = space();
        let g = p(&s, "1 - u1^2 - u2^2");
        let sq = g.mul(&g).unwrap();
        assert_eq!(sq.num_terms(), 6);
        assert_eq!(sq, p(&s, "(1 - u1^2 - u2^2)^2"));
        assert_eq!(p(&s, "x1").mul(&p(&s, "x2")).unwrap().to_string(), "x1*x2");
    }

    #[test]
    fn derivatives() {
        let s = VariableSpace::new(2, 1, true).unwrap();
        let x1 = s.var("x1").unwrap();
        let t = s.time_var().unwrap();
        assert_eq!(p(&s, "x1^2*x2").differentiate(x1).unwrap(), p(&s, "2*x1*x2"));
        assert!(p(&s, "1 - x1^2 - x2^2").differentiate(t).unwrap().is_zero());
        assert_eq!(p(&s, "1 - x1^2 - x2^2").differentiate(x1).unwrap(), p(&s, "-2*x1"));
    }

    #[test]
    fn evaluation_examples() {
        let s = space();
        assert_eq!(p(&s, "1 - x1^2 - x2^2").evaluate(&[0.5, 0.0, 0.0, 0.0]).unwrap(), 0.75);
        assert_eq!(Polynomial::zero(&s).evaluate(&[0.3, 0.1, 0.2, 0.9]).unwrap(), 0.0);
        let lq = VariableSpace::new(2, 1, false).unwrap();
        let l = p(&lq, "2*x1^2 + 0.5*x1*x2 + x2^2 + u^2");
        assert_eq!(l.evaluate(&[1.0, 1.0, 1.0]).unwrap(), 4.5);
        assert!(l.evaluate(&[1.0]).is_err());
        let mut a = BTreeMap::new();
        a.insert(0, 1.0);
        assert!(matches!(l.evaluate_at(&a), Err(CoreError::MissingVariable(_))));
    }

    #[test]
    fn hjb_examples() {
        let s = space();
        let u1 = Polynomial::var(&s, 2);
        let u2 = Polynomial::var(&s, 3);
        let f = [u1, u2];
        let phi = p(&s, "1 - x1^2 - x2^2");
        let h = hjb_operator(&p(&s, "1"), &phi, &f, HorizonMode::FreeTime).unwrap();
        assert_eq!(h, p(&s, "1 - 2*x1*u1 - 2*x2*u2"));
        let z = Polynomial::zero(&s);
        assert!(hjb_operator(&z, &z, &f, HorizonMode::FreeTime).unwrap().is_zero());
        let l = p(&s, "x1^2 + x2^2 + u1^2 + u2^2");
        let h = hjb_operator(&l, &phi, &f, HorizonMode::FreeTime).unwrap();
        assert_eq!(h, p(&s, "(x1 - u1)^2 + (x2 - u2)^2"));
    }

    #[test]
    fn free_time_rejects_time_dependent_phi() {
        let s = VariableSpace::new(1, 1, true).unwrap();
        let f = [p(&s, "u")];
        let r = hjb_operator(&p(&s, "1"), &p(&s, "t*x1"), &f, HorizonMode::FreeTime);
        assert!(matches!(r, Err(CoreError::TimeDependentPhi)));
        let h = hjb_operator(&p(&s, "0"), &p(&s, "t*x1"), &f, HorizonMode::FixedTime).unwrap();
        assert_eq!(h, p(&s, "x1 + t*u"));
    }

    #[test]
    fn mismatched_spaces_are_errors() {
        let a = Polynomial::constant(&space(), 1.0);
        let b = Polynomial::constant(&VariableSpace::new(1, 1, false).unwrap(), 1.0);
        assert!(matches!(a.add(&b), Err(CoreError::SpaceMismatch)));
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn drop_tolerance_removes_cancellation_noise() {
        let s = space();
        let a = p(&s, "0.1*x1 + 0.2*x1");
        let b = p(&s, "0.3*x1");
        assert!(a.sub(&b).unwrap().is_zero());
    }
}
