//! Sums-of-squares certificates compiled to Gram blocks and linear rows.
//!
//! A positivity requirement `q >= 0 on K = {g_i >= 0, h_j = 0}` with `q`
//! affine in SDP unknowns becomes
//! `q = s_0 + sum_i s_i g_i + sum_j l_j h_j`, where each `s_i = m^T Q_i m`
//! has a PSD Gram block truncated so that `deg(s_i g_i) <= 2p` and each `l_j`
//! is a sign-free polynomial of degree `2p - deg h_j` with free coefficients.
//! One equality row is emitted per monomial of degree `<= 2p`, in graded order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use ioc_sdp::{LinearExpr, SdpProblem, VarRef};
use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::polynomial::{monomial_basis, Monomial, MonomialBasis, Polynomial, Var, VariableSpace};
use crate::semialgebraic::BasicSemialgebraicSet;

/// `constant + sum_k c_k v_k` for SDP variables `v_k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineCoef {
    pub constant: f64,
    pub vars: BTreeMap<VarRef, f64>,
}

impl AffineCoef {
    fn add_scaled(&mut self, other: &AffineCoef, k: f64) {
        self.constant += k * other.constant;
        for (v, c) in &other.vars {
            *self.vars.entry(*v).or_insert(0.0) += k * c;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.vars.values().all(|c| *c == 0.0)
    }

    /// Value under an assignment of the SDP variables.
    pub fn value(&self, lookup: impl Fn(VarRef) -> f64) -> f64 {
        self.constant + self.vars.iter().map(|(v, c)| c * lookup(*v)).sum::<f64>()
    }

    pub fn expr(&self) -> LinearExpr {
        LinearExpr::from_terms(self.vars.iter().map(|(v, c)| (*v, *c)))
    }
}

/// Polynomial whose coefficients are affine in SDP unknowns.
#[derive(Clone, Debug)]
pub struct AffinePoly {
    space: Arc<VariableSpace>,
    terms: BTreeMap<Monomial, AffineCoef>,
}

impl AffinePoly {
    pub fn zero(space: &Arc<VariableSpace>) -> Self {
        Self {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_poly(p: &Polynomial) -> Self {
        let mut out = Self::zero(p.space());
        out.add_poly(p, 1.0);
        out
    }

    pub fn space(&self) -> &Arc<VariableSpace> {
        &self.space
    }

    /// `self += k * p`
    pub fn add_poly(&mut self, p: &Polynomial, k: f64) {
        for (m, c) in p.terms() {
            self.terms.entry(m.clone()).or_default().constant += k * c;
        }
    }

    /// `self += k * var * p`
    pub fn add_var_times(&mut self, var: VarRef, p: &Polynomial, k: f64) {
        for (m, c) in p.terms() {
            *self
                .terms
                .entry(m.clone())
                .or_default()
                .vars
                .entry(var)
                .or_insert(0.0) += k * c;
        }
    }

    /// `self += k * other`
    pub fn add(&mut self, other: &AffinePoly, k: f64) {
        for (m, c) in &other.terms {
            self.terms.entry(m.clone()).or_default().add_scaled(c, k);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &AffineCoef)> + '_ {
        self.terms.iter().filter(|(_, c)| !c.is_zero())
    }

    pub fn degree(&self) -> u32 {
        self.terms().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.terms().flat_map(|(m, _)| m.vars()).collect()
    }

    /// Linear functional obtained by evaluating at a full point.
    pub fn eval(&self, z: &[f64]) -> AffineCoef {
        let mut out = AffineCoef::default();
        for (m, c) in self.terms() {
            out.add_scaled(c, m.eval(z));
        }
        out
    }

    /// Substitutes `v = value` in every monomial.
    pub fn substitute(&self, v: Var, value: f64) -> Self {
        let mut out = Self::zero(&self.space);
        for (m, c) in self.terms() {
            let (e, rest) = m.without(v);
            out.terms.entry(rest).or_default().add_scaled(c, value.powi(e as i32));
        }
        out
    }

    /// Concrete polynomial under an assignment of the SDP variables.
    pub fn instantiate(&self, lookup: impl Fn(VarRef) -> f64) -> Polynomial {
        Polynomial::from_terms(
            &self.space,
            self.terms().map(|(m, c)| (m.clone(), c.value(&lookup))),
        )
    }
}

/// `m(z)^T Q m(z)` with `Q` a PSD block of the SDP.
#[derive(Clone, Debug)]
pub struct GramVariable {
    pub space: Arc<VariableSpace>,
    pub basis: MonomialBasis,
    pub block: usize,
}

/// Declares a fresh PSD block for an SOS polynomial of degree `2d` in `vars`.
pub fn gram_parametrize(
    sdp: &mut SdpProblem,
    space: &Arc<VariableSpace>,
    vars: &[Var],
    d: u32,
    label: impl Into<String>,
) -> GramVariable {
    gram_from_basis(sdp, space, monomial_basis(vars, d), label)
}

/// Declares a PSD block for `m^T Q m` over an arbitrary basis.
pub fn gram_from_basis(
    sdp: &mut SdpProblem,
    space: &Arc<VariableSpace>,
    basis: MonomialBasis,
    label: impl Into<String>,
) -> GramVariable {
    let block = sdp.add_psd_block(basis.len(), label);
    GramVariable {
        space: space.clone(),
        basis,
        block,
    }
}

impl GramVariable {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Entries `(i, j, weight, m_i m_j)` for `i <= j`; off-diagonal weights are 2.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64, Monomial)> + '_ {
        let b = &self.basis.elements;
        (0..b.len()).flat_map(move |i| {
            (i..b.len()).map(move |j| (i, j, if i == j { 1.0 } else { 2.0 }, b[i].mul(&b[j])))
        })
    }

    /// The represented polynomial as an affine expression in the block entries.
    pub fn as_affine(&self) -> AffinePoly {
        let mut out = AffinePoly::zero(&self.space);
        for (i, j, w, m) in self.entries() {
            let p = Polynomial::monomial(&self.space, m, w);
            out.add_var_times(VarRef::psd(self.block, i, j), &p, 1.0);
        }
        out
    }

    pub fn reconstruct(&self, q: &DMatrix<f64>) -> Result<Polynomial> {
        reconstruct(&self.space, &self.basis, q)
    }
}

/// `m^T Q m` expanded over the basis pairs.
pub fn reconstruct(space: &Arc<VariableSpace>, basis: &MonomialBasis, q: &DMatrix<f64>) -> Result<Polynomial> {
    let n = basis.len();
    if q.nrows() != n || q.ncols() != n {
        return Err(CoreError::Dimension {
            expected: n,
            got: q.nrows(),
        });
    }
    let b = &basis.elements;
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            terms.push((b[i].mul(&b[j]), q[(i, j)]));
        }
    }
    Ok(Polynomial::from_terms(space, terms))
}

/// Positivity of `target` on `set` with multiplier degrees bounded by `2 * half_degree`.
#[derive(Clone, Debug)]
pub struct PutinarCertificate {
    pub target: AffinePoly,
    pub set: BasicSemialgebraicSet,
    pub half_degree: u32,
    pub label: String,
}

#[derive(Clone, Debug)]
pub enum Multiplier {
    /// SOS multiplier of the constraint `g >= 0` (`g = 1` for the first).
    Sos { g: Polynomial, gram: GramVariable },
    /// Sign-free multiplier of an equality, with one free scalar per basis monomial.
    Free { h: Polynomial, basis: MonomialBasis, coefs: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct CompiledCertificate {
    pub label: String,
    pub half_degree: u32,
    pub vars: Vec<Var>,
    pub multipliers: Vec<Multiplier>,
    /// Equality rows of the SDP, one per monomial of `row_monomials`.
    pub rows: std::ops::Range<usize>,
    pub row_monomials: Vec<Monomial>,
    /// Constraints whose degree exceeds `2p`; they get no multiplier.
    pub skipped: Vec<Polynomial>,
}

impl CompiledCertificate {
    /// Plain-text listing of blocks and matching rows.
    pub fn dump(&self, sdp: &SdpProblem, space: &VariableSpace) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "certificate {} (half degree {})", self.label, self.half_degree);
        for m in &self.multipliers {
            match m {
                Multiplier::Sos { g, gram } => {
                    let _ = writeln!(
                        out,
                        "  sos block {} size {} degree {} for g = {g}",
                        gram.block,
                        gram.size(),
                        gram.basis.degree
                    );
                }
                Multiplier::Free { h, basis, .. } => {
                    let _ = writeln!(out, "  free multiplier with {} coefficients for h = {h}", basis.len());
                }
            }
        }
        for g in &self.skipped {
            let _ = writeln!(out, "  skipped (degree above 2p): {g}");
        }
        let _ = writeln!(out, "  {} matching rows", self.rows.len());
        for (r, m) in self.rows.clone().zip(&self.row_monomials) {
            let row = &sdp.eq_constraints[r];
            let terms: Vec<String> = row
                .expr
                .terms()
                .iter()
                .map(|(v, c)| format!("{c:+}*{v}"))
                .collect();
            let _ = writeln!(out, "  [{}] {} = {}", m.render(space), terms.join(" "), row.rhs);
        }
        out
    }

    /// Concrete multipliers from a solved SDP: `(g, s)` pairs and `(h, l)` pairs.
    pub fn multiplier_values(
        &self,
        lookup: impl Fn(VarRef) -> f64,
    ) -> Result<Vec<(Polynomial, Polynomial)>> {
        let mut out = Vec::new();
        for m in &self.multipliers {
            match m {
                Multiplier::Sos { g, gram } => {
                    let n = gram.size();
                    let q = DMatrix::from_fn(n, n, |i, j| lookup(VarRef::psd(gram.block, i, j)));
                    out.push((g.clone(), gram.reconstruct(&q)?));
                }
                Multiplier::Free { h, basis, coefs } => {
                    let space = h.space();
                    let l = Polynomial::from_terms(
                        space,
                        basis
                            .elements
                            .iter()
                            .zip(coefs)
                            .map(|(m, &k)| (m.clone(), lookup(VarRef::Free(k)))),
                    );
                    out.push((h.clone(), l));
                }
            }
        }
        Ok(out)
    }
}

/// Emits Gram blocks, free multipliers and matching rows into `sdp`.
pub fn compile_positivity(cert: &PutinarCertificate, sdp: &mut SdpProblem) -> Result<CompiledCertificate> {
    let space = cert.target.space().clone();
    let two_p = 2 * cert.half_degree;
    if let Some((m, _)) = cert.target.terms().find(|(m, _)| m.degree() > two_p) {
        return Err(CoreError::DegreeShortfall {
            term: m.render(&space),
            degree: m.degree(),
            bound: two_p,
        });
    }
    let mut vars: BTreeSet<Var> = cert.set.variables.iter().copied().collect();
    vars.extend(cert.target.variables());
    let vars: Vec<Var> = vars.into_iter().collect();

    let row_basis = monomial_basis(&vars, two_p);
    let index: HashMap<&Monomial, usize> = row_basis.elements.iter().enumerate().map(|(k, m)| (m, k)).collect();
    let mut rows: Vec<BTreeMap<VarRef, f64>> = vec![BTreeMap::new(); row_basis.len()];
    let mut rhs = vec![0.0; row_basis.len()];

    for (m, c) in cert.target.terms() {
        let k = index[m];
        rhs[k] -= c.constant;
        for (v, a) in &c.vars {
            *rows[k].entry(*v).or_insert(0.0) += a;
        }
    }

    let mut multipliers = Vec::new();
    let mut skipped = Vec::new();
    let one = Polynomial::constant(&space, 1.0);
    let sos_constraints = std::iter::once(&one).chain(&cert.set.inequalities);
    for (i, g) in sos_constraints.enumerate() {
        let dg = g.degree();
        if dg > two_p {
            skipped.push(g.clone());
            continue;
        }
        let d = (two_p - dg) / 2;
        let gram = gram_parametrize(sdp, &space, &vars, d, format!("{}/sigma{i}", cert.label));
        for (a, b, w, mm) in gram.entries() {
            let var = VarRef::psd(gram.block, a, b);
            for (gm, gc) in g.terms() {
                let k = index[&mm.mul(gm)];
                *rows[k].entry(var).or_insert(0.0) -= w * gc;
            }
        }
        multipliers.push(Multiplier::Sos { g: g.clone(), gram });
    }
    for (j, h) in cert.set.equalities.iter().enumerate() {
        let dh = h.degree();
        if dh > two_p {
            skipped.push(h.clone());
            continue;
        }
        let basis = monomial_basis(&vars, two_p - dh);
        let coefs: Vec<usize> = (0..basis.len())
            .map(|k| sdp.add_free(format!("{}/lambda{j}[{k}]", cert.label)))
            .collect();
        for (m, &cid) in basis.elements.iter().zip(&coefs) {
            for (hm, hc) in h.terms() {
                let k = index[&m.mul(hm)];
                *rows[k].entry(VarRef::Free(cid)).or_insert(0.0) -= hc;
            }
        }
        multipliers.push(Multiplier::Free {
            h: h.clone(),
            basis,
            coefs,
        });
    }

    let start = sdp.eq_constraints.len();
    for ((m, row), b) in row_basis.elements.iter().zip(rows).zip(rhs) {
        let expr = LinearExpr::from_terms(row);
        sdp.add_eq(expr, b, format!("{}[{}]", cert.label, m.render(&space)));
    }
    let end = sdp.eq_constraints.len();
    Ok(CompiledCertificate {
        label: cert.label.clone(),
        half_degree: cert.half_degree,
        vars,
        multipliers,
        rows: start..end,
        row_monomials: row_basis.elements,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_block_sizes() {
        let s = VariableSpace::new(2, 2, false).unwrap();
        let mut sdp = SdpProblem::new();
        assert_eq!(gram_parametrize(&mut sdp, &s, &[2, 3], 1, "a").size(), 3);
        assert_eq!(gram_parametrize(&mut sdp, &s, &[0], 0, "b").size(), 1);
        assert_eq!(gram_parametrize(&mut sdp, &s, &[0, 1], 2, "c").size(), 6);
        assert_eq!(sdp.psd_blocks.iter().map(|b| b.size).collect::<Vec<_>>(), [3, 1, 6]);
    }

    #[test]
    fn reconstruct_examples() {
        let s = VariableSpace::new(2, 2, false).unwrap();
        let b = monomial_basis(&[0, 1], 1);
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0, 1.0]));
        assert_eq!(reconstruct(&s, &b, &q).unwrap(), Polynomial::parse(&s, "x1^2 + x2^2").unwrap());
        let b1 = monomial_basis(&[0], 1);
        let q = DMatrix::from_element(2, 2, 1.0);
        assert_eq!(reconstruct(&s, &b1, &q).unwrap(), Polynomial::parse(&s, "1 + 2*x1 + x1^2").unwrap());
        assert!(reconstruct(&s, &b1, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn affine_gram_matches_reconstruct() {
        let s = VariableSpace::new(2, 1, false).unwrap();
        let mut sdp = SdpProblem::new();
        let g = gram_parametrize(&mut sdp, &s, &[0, 1], 1, "g");
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -1.0, 0.5, 1.0, 0.25, -1.0, 0.25, 3.0]);
        let via_affine = g.as_affine().instantiate(|v| match v {
            VarRef::Psd { row, col, .. } => q[(row, col)],
            VarRef::Free(_) => 0.0,
        });
        assert_eq!(via_affine, g.reconstruct(&q).unwrap());
    }

    #[test]
    fn degree_shortfall_names_the_term() {
        let s = VariableSpace::new(2, 2, false).unwrap();
        let k = BasicSemialgebraicSet::ball(&s, &[0, 1], 1.0);
        let target = AffinePoly::from_poly(&Polynomial::parse(&s, "x1^4 + 1").unwrap());
        let cert = PutinarCertificate {
            target,
            set: k,
            half_degree: 1,
            label: "c".into(),
        };
        let err = compile_positivity(&cert, &mut SdpProblem::new()).unwrap_err();
        assert!(err.to_string().contains("x1^4"), "{err}");
    }

    #[test]
    fn rows_follow_graded_order() {
        let s = VariableSpace::new(2, 2, false).unwrap();
        let k = BasicSemialgebraicSet::ball(&s, &[0, 1], 1.0);
        let cert = PutinarCertificate {
            target: AffinePoly::from_poly(&Polynomial::parse(&s, "1 - x1^2").unwrap()),
            set: k,
            half_degree: 1,
            label: "c".into(),
        };
        let mut sdp = SdpProblem::new();
        let c = compile_positivity(&cert, &mut sdp).unwrap();
        assert_eq!(c.rows.len(), 6);
        let names: Vec<String> = c.row_monomials.iter().map(|m| m.render(&s)).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
        // sigma0 of degree 2 (3x3), sigma1 constant (1x1)
        assert_eq!(sdp.psd_blocks.iter().map(|b| b.size).collect::<Vec<_>>(), [3, 1]);
        assert!(sdp.validate().is_ok());
        assert!(c.dump(&sdp, &s).contains("6 matching rows"));
    }
}
